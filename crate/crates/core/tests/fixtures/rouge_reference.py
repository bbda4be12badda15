"""Regenerates rouge_reference.json with the `rouge-score` package.

Tokenization is reimplemented here (NFC, Turkish dotted/dotless I, lowercase,
alphanumeric runs) so the Rust side is checked end to end.

    pip install rouge-score
    python3 rouge_reference.py > rouge_reference.json
"""
import json
import re
import sys
import unicodedata

from rouge_score import rouge_scorer


class TurkishTokenizer:
    def tokenize(self, text):
        text = unicodedata.normalize("NFC", text)
        text = text.replace("İ", "i").replace("I", "ı").lower()
        text = unicodedata.normalize("NFC", text)
        return [t for t in re.split(r"[^\w]|_", text) if t]


PAIRS = [
    ("kedi evde uyur", "kedi bahçede uyur"),
    ("Osmanlı Devleti hangi yılda kuruldu?", "Osmanlı Devleti 1299 yılında Söğüt'te kuruldu."),
    ("İSTANBUL'un fethi 1453 yılında gerçekleşti.", "İstanbul 1453'te II. Mehmet tarafından fethedildi."),
    ("Mitokondri hücrenin enerji santralidir.", "Mitokondri oksijenli solunum yoluyla enerji üretir, bu yüzden hücrenin enerji santrali olarak anılır."),
    ("Van Gölü'nün suyu neden içilemez?", "Van Gölü ülkenin en büyük gölüdür ve sodalı suyu nedeniyle içme suyu olarak kullanılamaz."),
    ("ISPARTA gül bahçeleriyle ünlüdür", "Isparta, gül yağı üretimiyle tanınan bir şehirdir."),
    ("a b a b a", "b a b"),
    ("bir iki üç dört beş", "beş dört üç iki bir"),
    ("tamamen farklı sözcükler", "hiçbir ortak kelime yok"),
    ("", "boş aday metni"),
]


def main():
    scorer = rouge_scorer.RougeScorer(["rouge1", "rouge2", "rougeL"], tokenizer=TurkishTokenizer())
    out = []
    for cand, ref in PAIRS:
        s = scorer.score(ref, cand)
        row = {"candidate": cand, "reference": ref}
        for key, name in [("rouge1", "rouge1"), ("rouge2", "rouge2"), ("rougeL", "rougeL")]:
            row[name] = {"precision": s[key].precision, "recall": s[key].recall, "f1": s[key].fmeasure}
        out.append(row)
    json.dump(out, sys.stdout, ensure_ascii=False, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
