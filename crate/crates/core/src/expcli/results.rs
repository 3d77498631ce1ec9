//! Results table: one row per (estimator, d, sigma_n, k).

use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RESULT_COLUMNS: [&str; 11] = [
    "estimator",
    "d",
    "sigma_x",
    "sigma_n",
    "k",
    "trials",
    "mean",
    "stderr",
    "theory_value",
    "theory_kind",
    "seed_root",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub estimator: String,
    pub d: usize,
    pub sigma_x: f64,
    pub sigma_n: f64,
    pub k: usize,
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Empty where the bound is not admissible.
    pub theory_value: Option<f64>,
    pub theory_kind: String,
    pub seed_root: u64,
}

impl ResultRow {
    fn order(&self, other: &Self) -> Ordering {
        self.estimator
            .cmp(&other.estimator)
            .then(self.d.cmp(&other.d))
            .then(self.sigma_n.total_cmp(&other.sigma_n))
            .then(self.k.cmp(&other.k))
    }
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(ResultRow::order);
}

/// Writes `bytes` to `path` through a sibling temp file and a rename, so a
/// reader never sees a partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(RESULT_COLUMNS).expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Sorts `rows` and writes them atomically.
pub fn write_results(path: &Path, rows: &mut [ResultRow]) -> Result<()> {
    sort_rows(rows);
    write_atomic(path, &rows_to_csv(rows))
}

/// Parses a results CSV. Errors name the first bad line (the header is line 1).
pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let bad = |row: usize, reason: String| Error::MalformedCsv { row, reason };
    let headers = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(bad(1, "missing header".into()));
    }
    if headers.iter().ne(RESULT_COLUMNS) {
        return Err(bad(1, format!("expected columns {}", RESULT_COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<ResultRow>().enumerate() {
        let line = i + 2;
        let row = rec.map_err(|e| bad(line, e.to_string()))?;
        if row.estimator != "d1" && row.estimator != "d2" {
            return Err(bad(line, format!("unknown estimator `{}`", row.estimator)));
        }
        if row.k == 0 || row.d == 0 {
            return Err(bad(line, "k and d must be positive".into()));
        }
        if !(row.mean.is_finite() && row.mean >= 0.0) {
            return Err(bad(line, format!("mean must be finite and nonnegative, got {}", row.mean)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(bad(2, "no data rows".into()));
    }
    Ok(rows)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(est: &str, d: usize, sn: f64, k: usize, mean: f64, theory: Option<f64>) -> ResultRow {
        ResultRow {
            estimator: est.into(),
            d,
            sigma_x: 1.0,
            sigma_n: sn,
            k,
            trials: 100,
            mean,
            stderr: mean / 10.0,
            theory_value: theory,
            theory_kind: "d2_lower_bound".into(),
            seed_root: 7,
        }
    }

    #[test]
    fn header_and_empty_theory() {
        let text = String::from_utf8(rows_to_csv(&[row("d2", 1, 0.2, 1, 0.5, None)])).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RESULT_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "d2,1,1.0,0.2,1,100,0.5,0.05,,d2_lower_bound,7");
    }

    #[test]
    fn sorting_order() {
        let mut rows = vec![
            row("d2", 1, 1.0, 2, 0.1, None),
            row("d1", 4, 0.2, 1, 0.1, None),
            row("d2", 1, 0.2, 4, 0.1, None),
            row("d2", 1, 0.2, 1, 0.1, None),
        ];
        sort_rows(&mut rows);
        let keys: Vec<_> = rows.iter().map(|r| (r.estimator.as_str(), r.d, r.sigma_n, r.k)).collect();
        assert_eq!(keys, vec![("d1", 4, 0.2, 1), ("d2", 1, 0.2, 1), ("d2", 1, 0.2, 4), ("d2", 1, 1.0, 2)]);
    }

    #[test]
    fn malformed_input_names_the_row() {
        let good = String::from_utf8(rows_to_csv(&[row("d1", 1, 1.0, 1, 0.5, Some(0.4))])).unwrap();
        let header = good.lines().next().unwrap();
        let cases = [
            (String::new(), 1),
            (format!("{header}\n"), 2),
            ("a,b\n1,2\n".to_string(), 1),
            (format!("{good}d3,1,1,1,1,100,0.5,0.1,,x,7\n"), 3),
            (format!("{good}{good}"), 3),
            (format!("{good}d1,1,1,1,1,100,abc,0.1,,x,7\n"), 3),
            (format!("{good}d1,1,1,1,1,100\n"), 3),
        ];
        for (text, want) in cases {
            match parse_results(&text) {
                Err(Error::MalformedCsv { row, .. }) => assert_eq!(row, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("results.csv");
        write_atomic(&p, b"x").unwrap();
        write_atomic(&p, b"y").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"y");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/r.csv"), b"x").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            cells in prop::collection::vec(
                (0usize..2, 1usize..20, 1e-3f64..10.0, 1usize..5000, 0.0f64..1e3, prop::option::of(1e-9f64..1e3)),
                1..30,
            )
        ) {
            let rows: Vec<ResultRow> = cells
                .into_iter()
                .map(|(e, d, sn, k, m, t)| row(["d1", "d2"][e], d, sn, k, m, t))
                .collect();
            let back = parse_results(std::str::from_utf8(&rows_to_csv(&rows)).unwrap()).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}
