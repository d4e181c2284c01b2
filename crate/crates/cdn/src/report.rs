//! CSV and TSV report writers. Every number is printed with six decimals.

use cdn_core::eval::{ClassDistanceReport, DistanceHistogram, DrugHitReport, GenerationRun, MetricsReport, SweepRow};
use cdn_core::model::{DecoderMode, EpochStats};
use cdn_core::smiles::is_valid_smiles;

/// Comment lines stating how the metric columns are computed.
pub const METRICS_PREAMBLE: &str = "\
# acc: positionwise token match against the prototype over its tokens and END (PAD excluded)
# acc, valid, novel, novel_graph: per-candidate fractions, averaged per prototype then over prototypes
# acc_at_k: summed acc; valid_at_k: valid candidates; novel_at_k: unique novel strings; all per prototype, averaged
";

pub fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

/// `metric,D,mode,k,value`, one line per metric per row.
pub fn metrics_csv(rows: &[SweepRow]) -> String {
    let mut w = writer();
    w.write_record(["metric", "D", "mode", "k", "value"]).unwrap();
    for r in rows {
        for (name, v) in r.report.entries() {
            w.write_record([name, &num(r.diversity as f64), r.mode.as_str(), &r.k.to_string(), &num(v)]).unwrap();
        }
    }
    format!("{METRICS_PREAMBLE}{}", finish(w))
}

/// A single-row table for one generation setting.
pub fn metrics_row(report: MetricsReport, diversity: f32, mode: DecoderMode, k: usize) -> SweepRow {
    SweepRow { diversity, mode, k, report }
}

/// `kind,distance,count` with one line per distinct distance.
pub fn histogram_csv(h: &DistanceHistogram) -> String {
    let mut w = writer();
    w.write_record(["kind", "distance", "count"]).unwrap();
    for (d, c) in h.counts() {
        w.write_record([h.kind.as_str(), &d.to_string(), &c.to_string()]).unwrap();
    }
    finish(w)
}

/// `D,kind,entries,mean,std` for histograms grouped by diversity.
pub fn distance_summary_csv(rows: &[(f32, DistanceHistogram)]) -> String {
    let mut w = writer();
    w.write_record(["D", "kind", "entries", "mean", "std"]).unwrap();
    for (d, h) in rows {
        w.write_record([&num(*d as f64), h.kind.as_str(), &h.distances.len().to_string(), &num(h.mean), &num(h.std)]).unwrap();
    }
    finish(w)
}

pub fn class_distances_csv(r: &ClassDistanceReport) -> String {
    let mut w = writer();
    w.write_record(["class", "cosine", "l2", "l1"]).unwrap();
    for row in &r.rows {
        w.write_record([&row.name, &num(row.cosine), &num(row.l2), &num(row.l1)]).unwrap();
    }
    finish(w)
}

pub fn drug_hits_csv(r: &DrugHitReport) -> String {
    let mut w = writer();
    w.write_record(["hit_count", "valid_generated", "percent"]).unwrap();
    w.write_record([&r.hits.len().to_string(), &r.valid_generated.to_string(), &num(r.percent)]).unwrap();
    finish(w)
}

/// `prototype<TAB>candidate<TAB>normalized` per hit.
pub fn drug_hits_tsv(r: &DrugHitReport) -> String {
    r.hits.iter().map(|h| format!("{}\t{}\t{}\n", h.prototype, h.candidate, h.normalized)).collect()
}

/// `prototype<TAB>candidate<TAB>valid` with valid as 1 or 0, after a header line.
pub fn candidates_tsv(runs: &[GenerationRun]) -> String {
    let mut s = String::from("prototype\tcandidate\tvalid\n");
    for r in runs {
        for c in &r.candidates {
            s.push_str(&format!("{}\t{}\t{}\n", r.prototype, c, u8::from(is_valid_smiles(c))));
        }
    }
    s
}

pub fn loss_curve_csv(baseline: f32, epochs: &[EpochStats]) -> String {
    let mut w = writer();
    w.write_record([
        "epoch",
        "learning_rate",
        "kl_weight",
        "train_total",
        "train_reconstruction",
        "train_kl",
        "validation_reconstruction",
        "validation_kl",
        "improved",
    ])
    .unwrap();
    // Epoch 0 is the untrained model; only its validation loss exists.
    w.write_record(["0", "", "", "", "", "", &num(baseline as f64), "", ""].map(String::from)).unwrap();
    for e in epochs {
        let f = |v: f32| num(v as f64);
        w.write_record([
            &e.epoch.to_string(),
            &f(e.learning_rate),
            &f(e.kl_weight),
            &f(e.train.total),
            &f(e.train.reconstruction),
            &f(e.train.kl),
            &f(e.validation.reconstruction),
            &f(e.validation.kl),
            &String::from(if e.improved { "1" } else { "0" }),
        ])
        .unwrap();
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdn_core::eval::{DistanceHistogram, HistogramKind};
    use cdn_core::model::DiversityConfig;

    #[test]
    fn metrics_rows_follow_the_preamble() {
        let r = MetricsReport { acc: 0.5, valid: 1.0, novel_at_k: 3.0, ..MetricsReport::default() };
        let s = metrics_csv(&[metrics_row(r, 2.0, DecoderMode::Sampling, 10)]);
        let body: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 8);
        assert_eq!(body[1], "acc,2.000000,sampling,10,0.500000");
        assert_eq!(body[7], "novel_at_k,2.000000,sampling,10,3.000000");
    }

    #[test]
    fn histogram_counts_are_sorted_by_distance() {
        let h = DistanceHistogram::new(HistogramKind::WithinPopulation, vec![3, 1, 3]);
        assert_eq!(histogram_csv(&h), "kind,distance,count\nwithin_population,1,1\nwithin_population,3,2\n");
        let s = distance_summary_csv(&[(1.0, h)]);
        assert_eq!(s.lines().nth(1), Some("1.000000,within_population,3,2.333333,0.942809"));
    }

    #[test]
    fn candidates_mark_validity() {
        let cfg = DiversityConfig { diversity: 1.0, k: 2, mode: DecoderMode::Argmax, seed: 0 };
        let run = GenerationRun { prototype: "CCO".into(), candidates: vec!["CCO".into(), "C1C".into()], cfg };
        assert_eq!(candidates_tsv(&[run]), "prototype\tcandidate\tvalid\nCCO\tCCO\t1\nCCO\tC1C\t0\n");
    }

    #[test]
    fn loss_curve_starts_with_the_baseline() {
        let s = loss_curve_csv(2.5, &[]);
        assert_eq!(s.lines().nth(1), Some("0,,,,,,2.500000,,"));
    }
}
