//! `review serve` exercised over plain HTTP, including a restart.

use std::path::Path;
use std::process::Stdio;

use quizforge_core::jsonl;
use quizforge_core::model::{
    self, OptionLabel, Provenance, QuizItem, QuizKind, QuizSet, SourceDocument, Subject,
};
use serde_json::{json, Value};
use tokio::io::{AsyncBufReadExt, BufReader};
use tokio::process::{Child, Command};

const BIN: &str = env!("CARGO_BIN_EXE_quizforge");

/// Four documents with five MCQs each.
fn write_fixture(dir: &Path) {
    let mut docs = Vec::new();
    let mut sets = Vec::new();
    for d in 0..4 {
        let doc_id = format!("doc-{d}");
        docs.push(SourceDocument {
            id: doc_id.clone(),
            subject: Subject::KNOWN[d].clone(),
            title: format!("Başlık {d}"),
            body: format!("Metin {d} burada duruyor ve sorular bu metinden üretildi."),
            source_url: None,
            token_count: 9,
        });
        let items = (0..5)
            .map(|i| {
                QuizItem::mcq(
                    model::item_id(&doc_id, i),
                    format!("Soru {d}.{i} nedir?"),
                    vec!["birinci".into(), "ikinci".into(), "üçüncü".into()],
                    OptionLabel::B,
                )
            })
            .collect();
        sets.push(QuizSet {
            doc_id,
            format: QuizKind::Mcq,
            items,
            provenance: Provenance {
                model: "m".into(),
                endpoint: "mock://quiz".into(),
                temperature: 0.7,
                generated_at: "2024-05-01T00:00:00Z".parse().unwrap(),
                notes: vec![],
            },
        });
    }
    jsonl::write_entities(dir.join("corpus.jsonl"), &docs).unwrap();
    jsonl::write_entities(dir.join("quiz.jsonl"), &sets).unwrap();
}

struct Server {
    child: Child,
    base: String,
}

async fn start(dir: &Path) -> Server {
    let mut child = Command::new(BIN)
        .args([
            "--json",
            "review",
            "serve",
            "--quiz",
            "quiz.jsonl",
            "--corpus",
            "corpus.jsonl",
        ])
        .args(["--store", "ratings.jsonl", "--port", "0"])
        .current_dir(dir)
        .stdout(Stdio::piped())
        .kill_on_drop(true)
        .spawn()
        .expect("server starts");
    let stdout = child.stdout.take().unwrap();
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line).await.unwrap();
    let announced: Value = serde_json::from_str(&line).unwrap_or_else(|e| panic!("{e}: {line:?}"));
    assert_eq!(announced["items"], 20);
    Server {
        child,
        base: announced["listening"].as_str().unwrap().to_string(),
    }
}

async fn get(http: &reqwest::Client, url: String) -> (u16, Value) {
    let resp = http.get(url).send().await.unwrap();
    (resp.status().as_u16(), resp.json().await.unwrap())
}

async fn post(http: &reqwest::Client, base: &str, body: Value) -> (u16, Value) {
    let resp = http
        .post(format!("{base}/api/ratings"))
        .json(&body)
        .send()
        .await
        .unwrap();
    (resp.status().as_u16(), resp.json().await.unwrap())
}

#[tokio::test]
async fn ratings_persist_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let http = reqwest::Client::new();

    let mut server = start(dir.path()).await;
    let base = server.base.clone();
    let (status, next) = get(&http, format!("{base}/api/items/next?annotator=ayse")).await;
    assert_eq!(status, 200);
    assert_eq!(next["item"]["index"], 0);
    assert_eq!(next["item"]["item_id"], "doc-0#0");
    assert_eq!(next["item"]["context"]["title"], "Başlık 0");

    let (status, _) = post(
        &http,
        &base,
        json!({"item_id": "doc-0#0", "annotator_id": "ayse", "rating": "A"}),
    )
    .await;
    assert_eq!(status, 201);
    let (_, progress) = get(&http, format!("{base}/api/progress?annotator=ayse")).await;
    assert_eq!(progress["ratings"], 1);
    assert_eq!(progress["annotator"]["rated"], 1);
    assert_eq!(progress["annotator"]["remaining"], 19);

    let (status, err) = post(
        &http,
        &base,
        json!({"item_id": "doc-0#1", "annotator_id": "ayse", "rating": "Z"}),
    )
    .await;
    assert_eq!(status, 400);
    assert!(err["error"].is_string());
    let (status, _) = post(
        &http,
        &base,
        json!({"item_id": "doc-9#9", "annotator_id": "ayse", "rating": "B"}),
    )
    .await;
    assert_eq!(status, 400);
    let resp = http
        .post(format!("{base}/api/ratings"))
        .header("content-type", "application/json")
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status().as_u16(), 400);
    let (status, _) = get(&http, format!("{base}/api/items/next")).await;
    assert_eq!(status, 400);
    let (status, _) = get(&http, format!("{base}/api/items/nope")).await;
    assert_eq!(status, 404);

    // Another annotator starts from the beginning.
    let (_, other) = get(&http, format!("{base}/api/items/next?annotator=mehmet")).await;
    assert_eq!(other["item"]["index"], 0);

    server.child.kill().await.unwrap();
    let server = start(dir.path()).await;
    let base = server.base.clone();
    let (_, next) = get(&http, format!("{base}/api/items/next?annotator=ayse")).await;
    assert_eq!(next["item"]["index"], 1);
    let (_, progress) = get(&http, format!("{base}/api/progress")).await;
    assert_eq!(progress["ratings"], 1);
    assert_eq!(progress["distribution"]["ratings"][0]["count"], 1);

    for expected in 1..20 {
        let (_, next) = get(&http, format!("{base}/api/items/next?annotator=ayse")).await;
        assert_eq!(next["item"]["index"], expected);
        let id = next["item"]["item_id"].as_str().unwrap().to_string();
        let (status, _) = post(
            &http,
            &base,
            json!({"item_id": id, "annotator_id": "ayse", "rating": "B"}),
        )
        .await;
        assert_eq!(status, 201);
    }
    let (_, done) = get(&http, format!("{base}/api/items/next?annotator=ayse")).await;
    assert_eq!(done["done"], true);
    assert_eq!(done["progress"]["rated"], 20);
    let (_, rubric) = get(&http, format!("{base}/api/rubric")).await;
    assert_eq!(rubric["ratings"].as_array().unwrap().len(), 5);
}
