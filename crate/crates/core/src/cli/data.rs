use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use rand_distr::{Distribution, Zipf};

use super::args::ZipfSpec;
use crate::error::{Error, Result};
use crate::model::{derive_rng, Dataset, Domain};

/// One raw string value per user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDataset {
    rows: Vec<String>,
}

impl RawDataset {
    pub fn from_rows(rows: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(RawDataset { rows })
    }

    /// Reads newline-delimited values or comma-separated rows, keeping the
    /// first column. Blank rows are skipped.
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(file);
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            if let Some(value) = record.get(0).map(str::trim).filter(|v| !v.is_empty()) {
                rows.push(value.to_owned());
            }
        }
        Self::from_rows(rows)
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    /// Keeps the `k` most frequent values (ties to the lexicographically
    /// smaller label) and drops every other user's row.
    pub fn top_k(self, k: usize) -> Result<Self> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for r in &self.rows {
            *counts.entry(r.as_str()).or_default() += 1;
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let keep: std::collections::HashSet<&str> =
            ranked.into_iter().take(k).map(|(l, _)| l).collect();
        let rows: Vec<String> = self
            .rows
            .iter()
            .filter(|r| keep.contains(r.as_str()))
            .cloned()
            .collect();
        Self::from_rows(rows)
    }

    pub fn into_dataset(self) -> Result<(Dataset, Domain)> {
        let domain = Domain::build(&self.rows)?;
        let values = self
            .rows
            .iter()
            .map(|r| {
                domain
                    .index_of(r)
                    .expect("label was inserted into the domain")
            })
            .collect();
        Ok((Dataset::new(values, domain.size())?, domain))
    }
}

pub fn load_dataset(path: &Path, topk: Option<usize>) -> Result<(Dataset, Domain)> {
    let raw = RawDataset::read(path)?;
    let raw = match topk {
        Some(k) => raw.top_k(k)?,
        None => raw,
    };
    raw.into_dataset()
}

/// Repetition index reserved for the synthetic generator's stream, so it
/// never overlaps a perturbation stream.
const SYNTHETIC_STREAM: u64 = u64::MAX;

/// Draws `n` users i.i.d. with `P(i) ∝ (i + 1)^(-s)` over `0..d`.
///
/// Labels come from [`Domain::indexed`], so index 0 is the most likely value.
pub fn generate_synthetic(spec: &ZipfSpec, seed: u64) -> Result<(Dataset, Domain)> {
    let d = spec.domain_size;
    let zipf = Zipf::new(d as f64, spec.exponent)
        .map_err(|e| Error::Usage(format!("invalid zipf parameters: {e}")))?;
    let mut rng = derive_rng(seed, SYNTHETIC_STREAM, 0);
    let values: Vec<usize> = (0..spec.users)
        .map(|_| (zipf.sample(&mut rng) as usize).clamp(1, d) - 1)
        .collect();

    Ok((Dataset::new(values, d)?, Domain::indexed(d)?))
}

/// Probability mass function of the synthetic generator.
pub fn zipf_pmf(exponent: f64, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=d).map(|r| (r as f64).powf(-exponent)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::l1_distance;
    use crate::model::true_frequencies;
    use std::io::Write;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn newline_values() {
        let f = file_with("a\nb\na\n");
        let (ds, dom) = load_dataset(f.path(), None).unwrap();
        assert_eq!((ds.len(), dom.size()), (3, 2));
        assert_eq!(ds.values(), [0, 1, 0]);
    }

    #[test]
    fn first_csv_column_and_blank_lines() {
        let f = file_with("x,1,2\ny,3\n\nx\n");
        let (ds, dom) = load_dataset(f.path(), None).unwrap();
        assert_eq!(dom.labels(), ["x", "y"]);
        assert_eq!(ds.values(), [0, 1, 0]);
    }

    #[test]
    fn top_k_reduction() {
        let mut rows = vec!["a"; 5];
        rows.extend(["b"; 3]);
        rows.push("c");
        let f = file_with(&rows.join("\n"));
        let (ds, dom) = load_dataset(f.path(), Some(2)).unwrap();
        assert_eq!((ds.len(), dom.size()), (8, 2));

        // Ties go to the smaller label.
        let raw = RawDataset::from_rows(["b", "a", "c", "c"].map(String::from).to_vec()).unwrap();
        assert_eq!(raw.top_k(2).unwrap().rows(), ["a", "c", "c"]);
    }

    #[test]
    fn top_k_equal_to_domain_is_identity() {
        let f = file_with("q\nr\ns\nq\n");
        assert_eq!(
            load_dataset(f.path(), Some(3)).unwrap(),
            load_dataset(f.path(), None).unwrap()
        );
    }

    #[test]
    fn reduction_to_one_value_is_too_small() {
        let f = file_with("a\na\nb\n");
        assert!(matches!(
            load_dataset(f.path(), Some(1)),
            Err(Error::DomainTooSmall(1))
        ));
    }

    #[test]
    fn kosarak_like_reduction_to_128() {
        let mut contents = String::new();
        for url in 0..300 {
            for _ in 0..(1 + 1000 / (url + 1)) {
                contents.push_str(&format!("http://news/{url}\n"));
            }
        }
        let f = file_with(&contents);
        let (_, dom) = load_dataset(f.path(), Some(128)).unwrap();
        assert_eq!(dom.size(), 128);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset(Path::new("/definitely/not/here.csv"), None).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = ZipfSpec::new(1.1, 128, 100_000).unwrap();
        let a = generate_synthetic(&spec, 17).unwrap();
        let b = generate_synthetic(&spec, 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.size(), 128);
        assert_eq!(a.1.label(5), Some("v005"));
    }

    #[test]
    fn synthetic_frequencies_follow_the_pmf() {
        let spec = ZipfSpec::new(1.1, 128, 100_000).unwrap();
        let (ds, dom) = generate_synthetic(&spec, 3).unwrap();
        let f = true_frequencies(&ds, &dom);
        assert!(l1_distance(&f, &zipf_pmf(1.1, 128)).unwrap() < 0.05);
    }

    #[test]
    fn small_exponent_is_nearly_uniform() {
        let spec = ZipfSpec::new(0.01, 8, 100_000).unwrap();
        let (ds, dom) = generate_synthetic(&spec, 4).unwrap();
        let f = true_frequencies(&ds, &dom);
        assert!(f.iter().all(|&x| (x - 0.125).abs() < 0.01), "{f:?}");
    }
}
