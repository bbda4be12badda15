//! Subject-aware prompt templates.
//!
//! A template is UTF-8 text with `{{placeholder}}` slots. Lines starting with
//! `##` are comments; a comment of the form `## schema: lettered` switches the
//! requested answer layout from JSON to the lettered plain-text layout.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::jsonl::IoError;
use crate::model::{OptionLabel, QuizKind, SourceDocument, Subject, MAX_OPTIONS, MIN_OPTIONS};

pub const PLACEHOLDERS: [&str; 5] = ["title", "body", "num_questions", "format", "output_schema"];
const REQUIRED: [&str; 2] = ["body", "num_questions"];
pub const FALLBACK_NAME: &str = "default";

/// Answer layout requested from the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSchema {
    #[default]
    Json,
    Lettered,
}

impl OutputSchema {
    /// Instruction text that tells the model which layout to produce.
    pub fn describe(self, params: &RenderParams) -> String {
        let k = params.options_per_question as usize;
        let labels: Vec<char> = OptionLabel::ALL[..k].iter().map(|l| l.as_char()).collect();
        match (self, params.format) {
            (OutputSchema::Json, QuizKind::Mcq) => {
                let options = labels
                    .iter()
                    .map(|l| format!("\"{l}\": \"...\""))
                    .collect::<Vec<_>>()
                    .join(", ");
                format!(
                    "Yanıtını yalnızca geçerli bir JSON dizisi olarak ver; dizinin dışında hiçbir metin yazma. \
                     Her soru şu biçimde olmalı:\n\
                     {{\"question\": \"Soru metni\", \"options\": {{{options}}}, \"answer\": \"{first}\"}}\n\
                     Her soruda tam olarak {k} şık ({first}-{last}) bulunmalı ve \"answer\" doğru şıkkın harfi olmalı.",
                    first = labels[0],
                    last = labels[k - 1],
                )
            }
            (OutputSchema::Json, QuizKind::Saq) => "Yanıtını yalnızca geçerli bir JSON dizisi olarak ver; dizinin dışında hiçbir metin yazma. \
                 Her soru şu biçimde olmalı:\n\
                 {\"question\": \"Soru metni\", \"answer\": \"Kısa cevap\"}"
                .to_string(),
            (OutputSchema::Lettered, QuizKind::Mcq) => {
                let mut out = String::from("Soruları aşağıdaki düz metin biçiminde, numaralandırarak yaz:\n1. Soru metni\n");
                for l in &labels {
                    out.push_str(&format!("{l}) Şık metni\n"));
                }
                out.push_str(&format!("Cevap: {}\nHer soruda tam olarak {k} şık bulunmalı.", labels[0]));
                out
            }
            (OutputSchema::Lettered, QuizKind::Saq) => {
                "Soruları aşağıdaki düz metin biçiminde, numaralandırarak yaz:\n1. Soru metni\nCevap: Kısa cevap"
                    .to_string()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    /// `None` for the fallback template.
    pub subject: Option<Subject>,
    pub template_text: String,
    pub output_schema: OutputSchema,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderParams {
    pub num_questions: u32,
    pub format: QuizKind,
    pub options_per_question: u8,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            num_questions: 5,
            format: QuizKind::Mcq,
            options_per_question: 5,
        }
    }
}

impl RenderParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.num_questions == 0 {
            return Err("num_questions must be positive".into());
        }
        let k = self.options_per_question as usize;
        if !(MIN_OPTIONS..=MAX_OPTIONS).contains(&k) {
            return Err(format!(
                "options_per_question must be between {MIN_OPTIONS} and {MAX_OPTIONS}, got {k}"
            ));
        }
        Ok(())
    }

    /// Turkish phrase substituted for `{{format}}`.
    pub fn format_phrase(&self) -> String {
        match self.format {
            QuizKind::Mcq => format!("{} şıklı çoktan seçmeli", self.options_per_question),
            QuizKind::Saq => "kısa cevaplı".to_string(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("{}:{line}: {message}", path.display())]
    Syntax {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no `{FALLBACK_NAME}` template in {}", .0.display())]
    MissingFallback(PathBuf),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// A placeholder occurrence: name and byte range of the whole `{{...}}`.
struct Slot<'a> {
    name: &'a str,
    start: usize,
    end: usize,
}

fn scan_slots(text: &str) -> Result<Vec<Slot<'_>>, (usize, String)> {
    let mut slots = Vec::new();
    let mut pos = 0;
    while let Some(rel) = text[pos..].find("{{") {
        let start = pos + rel;
        let line = text[..start].matches('\n').count() + 1;
        let Some(close) = text[start + 2..].find("}}") else {
            return Err((line, "unterminated `{{`".into()));
        };
        let end = start + 2 + close + 2;
        let name = text[start + 2..end - 2].trim();
        if name.contains('\n') || name.contains("{{") {
            return Err((line, "unterminated `{{`".into()));
        }
        if !PLACEHOLDERS.contains(&name) {
            return Err((line, format!("unknown placeholder `{{{{{name}}}}}`")));
        }
        slots.push(Slot { name, start, end });
        pos = end;
    }
    Ok(slots)
}

impl PromptTemplate {
    /// Parses template source. Errors carry a 1-based source line number.
    pub fn parse(
        name: &str,
        subject: Option<Subject>,
        source: &str,
    ) -> Result<PromptTemplate, (usize, String)> {
        let mut output_schema = OutputSchema::Json;
        let mut kept = Vec::new();
        let mut line_map = Vec::new();
        for (i, line) in source.lines().enumerate() {
            if let Some(comment) = line.strip_prefix("##") {
                if let Some(value) = comment.trim().strip_prefix("schema:") {
                    output_schema = match value.trim() {
                        "json" => OutputSchema::Json,
                        "lettered" => OutputSchema::Lettered,
                        other => return Err((i + 1, format!("unknown schema `{other}`"))),
                    };
                }
                continue;
            }
            kept.push(line);
            line_map.push(i + 1);
        }
        let template_text = kept.join("\n").trim_matches('\n').to_string();
        let leading_blank = kept.iter().take_while(|l| l.is_empty()).count();
        let slots = scan_slots(&template_text).map_err(|(line, msg)| {
            (
                line_map
                    .get(line - 1 + leading_blank)
                    .copied()
                    .unwrap_or(line),
                msg,
            )
        })?;
        for required in REQUIRED {
            if !slots.iter().any(|s| s.name == required) {
                return Err((1, format!("template must reference `{{{{{required}}}}}`")));
            }
        }
        Ok(PromptTemplate {
            name: name.to_string(),
            subject,
            template_text,
            output_schema,
        })
    }

    pub fn render(&self, doc: &SourceDocument, params: &RenderParams) -> String {
        let schema = self.output_schema.describe(params);
        let num = params.num_questions.to_string();
        let format = params.format_phrase();
        let value = |name: &str| -> &str {
            match name {
                "title" => &doc.title,
                "body" => &doc.body,
                "num_questions" => &num,
                "format" => &format,
                _ => &schema,
            }
        };
        render_slots(&self.template_text, value)
    }
}

fn render_slots<'v>(text: &str, value: impl Fn(&str) -> &'v str) -> String {
    // Templates are validated at parse time, so scanning cannot fail here.
    let slots = scan_slots(text).unwrap_or_default();
    let mut out = String::with_capacity(text.len() * 2);
    let mut pos = 0;
    for slot in slots {
        out.push_str(&text[pos..slot.start]);
        out.push_str(value(slot.name));
        pos = slot.end;
    }
    out.push_str(&text[pos..]);
    out
}

/// Templates keyed by subject slug, plus the mandatory fallback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    by_slug: BTreeMap<String, PromptTemplate>,
    fallback: PromptTemplate,
}

impl TemplateSet {
    pub fn new(
        fallback: PromptTemplate,
        specific: impl IntoIterator<Item = PromptTemplate>,
    ) -> TemplateSet {
        let by_slug = specific.into_iter().map(|t| (t.name.clone(), t)).collect();
        TemplateSet { by_slug, fallback }
    }

    /// Number of templates including the fallback.
    pub fn len(&self) -> usize {
        self.by_slug.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn fallback(&self) -> &PromptTemplate {
        &self.fallback
    }

    /// Subject-specific template when one exists, else the fallback.
    pub fn select(&self, subject: &Subject) -> &PromptTemplate {
        self.by_slug.get(&subject.slug()).unwrap_or(&self.fallback)
    }

    pub fn render(&self, doc: &SourceDocument, params: &RenderParams) -> String {
        self.select(&doc.subject).render(doc, params)
    }
}

pub fn render(doc: &SourceDocument, params: &RenderParams, templates: &TemplateSet) -> String {
    templates.render(doc, params)
}

fn subject_for_slug(slug: &str) -> Subject {
    Subject::KNOWN
        .iter()
        .find(|s| s.slug() == slug)
        .cloned()
        .unwrap_or_else(|| Subject::Other(slug.to_string()))
}

/// Loads every `*.tmpl` / `*.txt` file of a directory. The file stem is the
/// subject slug; `default` is the fallback and must be present.
pub fn load_templates(dir: impl AsRef<Path>) -> Result<TemplateSet, TemplateError> {
    let dir = dir.as_ref();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| IoError::new(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(p.extension().and_then(|e| e.to_str()), Some("tmpl" | "txt"))
                && !p
                    .file_name()
                    .is_some_and(|n| n.to_string_lossy().starts_with('.'))
        })
        .collect();
    entries.sort();
    let mut fallback = None;
    let mut specific = Vec::new();
    for path in entries {
        let slug = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let source = fs::read_to_string(&path).map_err(|e| IoError::new(&path, e))?;
        let subject = (slug != FALLBACK_NAME).then(|| subject_for_slug(&slug));
        let template =
            PromptTemplate::parse(&slug, subject, &source).map_err(|(line, message)| {
                TemplateError::Syntax {
                    path: path.clone(),
                    line,
                    message,
                }
            })?;
        if slug == FALLBACK_NAME {
            fallback = Some(template);
        } else {
            specific.push(template);
        }
    }
    let fallback = fallback.ok_or_else(|| TemplateError::MissingFallback(dir.to_path_buf()))?;
    Ok(TemplateSet::new(fallback, specific))
}

const BUILTIN: [(&str, &str); 7] = [
    ("default", include_str!("../assets/templates/default.tmpl")),
    ("biology", include_str!("../assets/templates/biology.tmpl")),
    (
        "chemistry",
        include_str!("../assets/templates/chemistry.tmpl"),
    ),
    (
        "geography",
        include_str!("../assets/templates/geography.tmpl"),
    ),
    ("history", include_str!("../assets/templates/history.tmpl")),
    (
        "philosophy",
        include_str!("../assets/templates/philosophy.tmpl"),
    ),
    (
        "turkish_literature",
        include_str!("../assets/templates/turkish_literature.tmpl"),
    ),
];

/// The templates shipped with the crate.
pub fn builtin_templates() -> TemplateSet {
    let mut fallback = None;
    let mut specific = Vec::new();
    for (slug, source) in BUILTIN {
        let subject = (slug != FALLBACK_NAME).then(|| subject_for_slug(slug));
        let t = PromptTemplate::parse(slug, subject, source).expect("built-in templates are valid");
        if slug == FALLBACK_NAME {
            fallback = Some(t);
        } else {
            specific.push(t);
        }
    }
    TemplateSet::new(fallback.expect("built-in fallback"), specific)
}

/// Instruction text for a training record: a template without the body.
/// Allowed placeholders are the same as for prompts, but `{{body}}` is
/// optional since the passage travels in the record's `input` field.
pub fn render_instruction(
    template: &str,
    title: &str,
    params: &RenderParams,
) -> Result<String, String> {
    scan_slots(template).map_err(|(line, msg)| format!("line {line}: {msg}"))?;
    let num = params.num_questions.to_string();
    let format = params.format_phrase();
    let schema = OutputSchema::Lettered.describe(params);
    Ok(render_slots(template, |name| match name {
        "title" => title,
        "num_questions" => &num,
        "format" => &format,
        "output_schema" => &schema,
        _ => "",
    }))
}

pub const DEFAULT_INSTRUCTION: &str =
    "Aşağıdaki Türkçe eğitim metnine dayanarak {{num_questions}} adet {{format}} soru hazırla. \
Sorular yalnızca metindeki bilgilere dayanmalı.\n{{output_schema}}";

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn doc(subject: Subject) -> SourceDocument {
        SourceDocument {
            id: "doc-1".into(),
            subject,
            title: "Kurtuluş Savaşı".into(),
            body: "Kurtuluş Savaşı 1919 yılında başladı.".into(),
            source_url: None,
            token_count: 5,
        }
    }

    fn write(dir: &Path, name: &str, text: &str) {
        fs::write(dir.join(name), text).unwrap();
    }

    #[test]
    fn loads_subject_and_fallback() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "biology.tmpl",
            "Biyoloji {{num_questions}}\n{{body}}",
        );
        write(
            dir.path(),
            "default.tmpl",
            "Genel {{num_questions}}\n{{body}}",
        );
        let set = load_templates(dir.path()).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.select(&Subject::Biology).name, "biology");
        assert_eq!(set.select(&Subject::History).name, "default");
    }

    #[test]
    fn unknown_placeholder_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "default.tmpl",
            "## note\n{{body}}\n{{num_questions}}\nbad {{bogus}}",
        );
        match load_templates(dir.path()) {
            Err(TemplateError::Syntax { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.contains("bogus"));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unterminated_placeholder() {
        assert!(PromptTemplate::parse("x", None, "{{body}} {{num_questions").is_err());
    }

    #[test]
    fn required_placeholders() {
        let err = PromptTemplate::parse("x", None, "only {{body}}").unwrap_err();
        assert!(err.1.contains("num_questions"));
    }

    #[test]
    fn empty_dir_is_missing_fallback() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_templates(dir.path()),
            Err(TemplateError::MissingFallback(_))
        ));
    }

    #[test]
    fn selects_history_template() {
        let set = builtin_templates();
        let params = RenderParams::default();
        let out = render(&doc(Subject::History), &params, &set);
        assert!(out.contains("neden-sonuç"));
        assert!(out.contains("Kurtuluş Savaşı 1919 yılında başladı."));
        assert!(out.contains("5 adet"));
        assert!(!out.contains("{{"));
    }

    #[test]
    fn other_subject_uses_fallback() {
        let set = builtin_templates();
        assert_eq!(set.select(&Subject::Other("Music".into())).name, "default");
    }

    #[test]
    fn lettered_schema_directive() {
        let t = PromptTemplate::parse(
            "x",
            None,
            "## schema: lettered\n{{body}} {{num_questions}} {{output_schema}}",
        )
        .unwrap();
        assert_eq!(t.output_schema, OutputSchema::Lettered);
        let out = t.render(
            &doc(Subject::History),
            &RenderParams {
                options_per_question: 3,
                ..Default::default()
            },
        );
        assert!(out.contains("C) Şık metni"));
        assert!(!out.contains("D) Şık metni"));
    }

    #[test]
    fn builtin_set_is_complete() {
        let set = builtin_templates();
        assert_eq!(set.len(), 7);
        for subject in Subject::KNOWN {
            assert_eq!(set.select(&subject).subject.as_ref(), Some(&subject));
        }
    }

    #[test]
    fn render_params_bounds() {
        assert!(RenderParams {
            num_questions: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(RenderParams {
            options_per_question: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(RenderParams {
            options_per_question: 6,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn instruction_has_no_body() {
        let out = render_instruction(DEFAULT_INSTRUCTION, "t", &RenderParams::default()).unwrap();
        assert!(out.contains("5 adet 5 şıklı çoktan seçmeli"));
        assert!(out.contains("Cevap:"));
    }
}
