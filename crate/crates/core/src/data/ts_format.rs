//! Reader and writer for the `.ts` text format used by the UCR/UEA and
//! Monash archives.
//!
//! ```text
//! @problemName Example
//! @univariate true
//! @seriesLength 2
//! @classLabel true a b c
//! @data
//! 1.0,2.0:a
//! ```
//!
//! Channels of a record are separated by `:` and the final `:`-delimited
//! token is the target. Header keys are case-insensitive and lines starting
//! with `#` are comments.

use std::fmt::Write as _;
use std::path::Path;

use super::{discretize_thresholds, discretize_uniform, OrdinalDataset, TimeSeriesInstance};
use crate::{Error, Result};

/// A `.ts` file with a real-valued target (`@targetLabel true`).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub name: String,
    pub instances: Vec<TimeSeriesInstance>,
    pub targets: Vec<f64>,
}

impl RegressionDataset {
    /// Equal-width binning of the targets into `bins` ordered classes.
    pub fn discretize_uniform(&self, bins: usize) -> Result<OrdinalDataset> {
        let labels = discretize_uniform(&self.targets, bins)?;
        self.with_labels(labels, bins)
    }

    /// Binning against fixed inner edges (right-closed intervals).
    pub fn discretize_thresholds(&self, edges: &[f64]) -> Result<OrdinalDataset> {
        let labels = self
            .targets
            .iter()
            .map(|&v| discretize_thresholds(v, edges))
            .collect();
        self.with_labels(labels, edges.len() + 1)
    }

    fn with_labels(&self, labels: Vec<usize>, q: usize) -> Result<OrdinalDataset> {
        OrdinalDataset::new(
            self.name.clone(),
            self.instances.clone(),
            labels,
            (1..=q).map(|i| i.to_string()).collect(),
        )
    }
}

enum Target {
    Classes(Vec<String>),
    Regression,
}

struct Header {
    name: String,
    target: Option<Target>,
    dimensions: Option<usize>,
    series_length: Option<usize>,
}

struct Raw {
    header: Header,
    instances: Vec<TimeSeriesInstance>,
    targets: Vec<(usize, String)>,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_bool(line: usize, key: &str, v: Option<&str>) -> Result<bool> {
    match v.map(str::to_ascii_lowercase).as_deref() {
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        _ => Err(perr(line, format!("@{key} expects true or false"))),
    }
}

fn parse_raw(text: &str) -> Result<Raw> {
    let mut header = Header {
        name: String::new(),
        target: None,
        dimensions: None,
        series_length: None,
    };
    let mut in_data = false;
    let mut instances = Vec::new();
    let mut targets = Vec::new();
    let mut shape: Option<(usize, usize)> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !in_data {
            let Some(rest) = line.strip_prefix('@') else {
                return Err(perr(lineno, "expected a header line before @data"));
            };
            let mut tokens = rest.split_whitespace();
            let key = tokens.next().unwrap_or("").to_ascii_lowercase();
            match key.as_str() {
                "problemname" => header.name = tokens.collect::<Vec<_>>().join(" "),
                "data" => {
                    if header.target.is_none() {
                        return Err(perr(lineno, "missing @classLabel or @targetLabel header"));
                    }
                    in_data = true;
                }
                "classlabel" => {
                    if parse_bool(lineno, "classLabel", tokens.next())? {
                        let names: Vec<String> = tokens.map(str::to_string).collect();
                        if names.len() < 2 {
                            return Err(perr(lineno, "@classLabel lists fewer than two classes"));
                        }
                        check_label_names(lineno, &names)?;
                        header.target = Some(Target::Classes(names));
                    } else {
                        return Err(perr(lineno, "unlabelled data is not supported"));
                    }
                }
                "targetlabel" => {
                    if parse_bool(lineno, "targetLabel", tokens.next())? {
                        header.target = Some(Target::Regression);
                    } else {
                        return Err(perr(lineno, "unlabelled data is not supported"));
                    }
                }
                "dimensions" => {
                    header.dimensions = Some(
                        tokens
                            .next()
                            .and_then(|v| v.parse().ok())
                            .ok_or_else(|| perr(lineno, "@dimensions expects an integer"))?,
                    )
                }
                "serieslength" => {
                    header.series_length = Some(
                        tokens
                            .next()
                            .and_then(|v| v.parse().ok())
                            .ok_or_else(|| perr(lineno, "@seriesLength expects an integer"))?,
                    )
                }
                "equallength" => {
                    if !parse_bool(lineno, "equalLength", tokens.next())? {
                        return Err(perr(lineno, "unequal-length series are not supported"));
                    }
                }
                "missing" => {
                    if parse_bool(lineno, "missing", tokens.next())? {
                        return Err(perr(lineno, "series with missing values are not supported"));
                    }
                }
                "timestamps" => {
                    if parse_bool(lineno, "timeStamps", tokens.next())? {
                        return Err(perr(lineno, "timestamped series are not supported"));
                    }
                }
                "univariate" => {
                    parse_bool(lineno, "univariate", tokens.next())?;
                }
                _ => return Err(perr(lineno, format!("unknown header @{key}"))),
            }
            continue;
        }

        let mut parts: Vec<&str> = line.split(':').collect();
        if parts.len() < 2 {
            return Err(perr(lineno, "record has no target token"));
        }
        let target = parts.pop().unwrap().trim().to_string();
        let mut channels = Vec::with_capacity(parts.len());
        for part in parts {
            let mut values = Vec::new();
            for tok in part.split(',') {
                let tok = tok.trim();
                if tok == "?" || tok.eq_ignore_ascii_case("nan") {
                    return Err(perr(lineno, "missing value"));
                }
                let v: f64 = tok
                    .parse()
                    .map_err(|_| perr(lineno, format!("non-numeric value {tok:?}")))?;
                if !v.is_finite() {
                    return Err(perr(lineno, format!("non-finite value {tok:?}")));
                }
                values.push(v);
            }
            channels.push(values);
        }
        let t = channels[0].len();
        if channels.iter().any(|c| c.len() != t) {
            return Err(perr(lineno, "channels of unequal length"));
        }
        let this = (channels.len(), t);
        match shape {
            None => shape = Some(this),
            Some(s) if s != this => {
                return Err(perr(
                    lineno,
                    format!(
                        "series shape {}x{} differs from {}x{} (unequal lengths)",
                        this.0, this.1, s.0, s.1
                    ),
                ))
            }
            _ => {}
        }
        if let Some(d) = header.dimensions {
            if d != this.0 {
                return Err(perr(lineno, format!("expected {d} channels, found {}", this.0)));
            }
        }
        if let Some(l) = header.series_length {
            if l != t {
                return Err(perr(lineno, format!("expected series length {l}, found {t}")));
            }
        }
        instances.push(TimeSeriesInstance::new(channels).map_err(|e| perr(lineno, e.to_string()))?);
        targets.push((lineno, target));
    }

    if !in_data {
        return Err(perr(text.lines().count(), "missing @data section"));
    }
    if instances.is_empty() {
        return Err(perr(text.lines().count(), "no records after @data"));
    }
    Ok(Raw {
        header,
        instances,
        targets,
    })
}

/// Numeric class names must already be listed in increasing order.
fn check_label_names(line: usize, names: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(perr(line, format!("duplicate class label {n:?}")));
        }
    }
    let numeric: Option<Vec<f64>> = names.iter().map(|n| n.parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(perr(
                line,
                "numeric class labels are not listed in increasing order",
            ));
        }
    }
    Ok(())
}

fn label_index(names: &[String], token: &str) -> Option<usize> {
    if let Some(i) = names.iter().position(|n| n == token) {
        return Some(i + 1);
    }
    // "1" and "1.0" name the same class
    let v: f64 = token.parse().ok()?;
    names
        .iter()
        .position(|n| n.parse::<f64>().ok() == Some(v))
        .map(|i| i + 1)
}

/// Parses a classification `.ts` file. Class order is the order of the
/// `@classLabel` header line.
pub fn parse_ts_file(text: &str) -> Result<OrdinalDataset> {
    let raw = parse_raw(text)?;
    let Some(Target::Classes(names)) = raw.header.target else {
        return Err(perr(0, "file has a regression target; use parse_ts_regression"));
    };
    let mut labels = Vec::with_capacity(raw.targets.len());
    for (line, tok) in &raw.targets {
        labels.push(
            label_index(&names, tok)
                .ok_or_else(|| perr(*line, format!("unknown class label {tok:?}")))?,
        );
    }
    OrdinalDataset::new(raw.header.name, raw.instances, labels, names)
}

/// Parses a regression `.ts` file (`@targetLabel true`).
pub fn parse_ts_regression(text: &str) -> Result<RegressionDataset> {
    let raw = parse_raw(text)?;
    if !matches!(raw.header.target, Some(Target::Regression)) {
        return Err(perr(0, "file has class labels; use parse_ts_file"));
    }
    let mut targets = Vec::with_capacity(raw.targets.len());
    for (line, tok) in &raw.targets {
        let v: f64 = tok
            .parse()
            .map_err(|_| perr(*line, format!("non-numeric target {tok:?}")))?;
        if !v.is_finite() {
            return Err(perr(*line, "non-finite target"));
        }
        targets.push(v);
    }
    Ok(RegressionDataset {
        name: raw.header.name,
        instances: raw.instances,
        targets,
    })
}

pub fn read_ts_file(path: impl AsRef<Path>) -> Result<OrdinalDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ts_file(&text)
}

/// Writes a dataset back in `.ts` format. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn serialize_ts(dataset: &OrdinalDataset) -> Result<String> {
    let bad = |s: &str| s.is_empty() || s.contains(|c: char| c.is_whitespace() || c == ':');
    if let Some(n) = dataset.class_names().iter().find(|n| bad(n)) {
        return Err(Error::InvalidArgument(format!(
            "class name {n:?} cannot be written to a .ts file"
        )));
    }
    let mut out = String::new();
    let c = dataset.n_channels();
    if !dataset.name().is_empty() {
        writeln!(out, "@problemName {}", dataset.name()).unwrap();
    }
    writeln!(out, "@timeStamps false").unwrap();
    writeln!(out, "@missing false").unwrap();
    writeln!(out, "@univariate {}", c == 1).unwrap();
    if c > 1 {
        writeln!(out, "@dimensions {c}").unwrap();
    }
    writeln!(out, "@equalLength true").unwrap();
    writeln!(out, "@seriesLength {}", dataset.series_length()).unwrap();
    writeln!(out, "@classLabel true {}", dataset.class_names().join(" ")).unwrap();
    writeln!(out, "@data").unwrap();
    for (inst, &label) in dataset.instances().iter().zip(dataset.labels()) {
        for ch in inst.channels() {
            let mut first = true;
            for v in ch {
                if !first {
                    out.push(',');
                }
                first = false;
                write!(out, "{v}").unwrap();
            }
            out.push(':');
        }
        out.push_str(&dataset.class_names()[label - 1]);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "@problemName tiny\n@univariate true\n@seriesLength 2\n@classLabel true a b c\n@data\n1.0,2.0:a\n";

    #[test]
    fn smallest_file() {
        let ds = parse_ts_file(SMALL).unwrap();
        assert_eq!(ds.n_classes(), 3);
        assert_eq!(ds.labels(), &[1]);
        assert_eq!(ds.series_length(), 2);
        assert_eq!(ds.n_channels(), 1);
        assert_eq!(ds.name(), "tiny");
    }

    #[test]
    fn multivariate_and_label_order() {
        let text = "# comment\n@problemname m\n@dimensions 2\n@classlabel true lo mid hi\n@data\n1,2,3:4,5,6:hi\n0,0,0:1,1,1:lo\n";
        let ds = parse_ts_file(text).unwrap();
        assert_eq!(ds.n_channels(), 2);
        assert_eq!(ds.labels(), &[3, 1]);
        assert_eq!(ds.instances()[0].channel(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn errors() {
        let unequal = "@classLabel true a b\n@data\n1,2:a\n1,2,3:b\n";
        assert!(matches!(parse_ts_file(unequal), Err(Error::Parse { line: 4, .. })));
        let unknown = "@classLabel true a b\n@data\n1,2:z\n";
        assert!(parse_ts_file(unknown).is_err());
        let nonnum = "@classLabel true a b\n@data\n1,x:a\n";
        assert!(parse_ts_file(nonnum).is_err());
        let missing = "@classLabel true a b\n@data\n1,?:a\n";
        assert!(parse_ts_file(missing).is_err());
        let no_header = "@data\n1,2:a\n";
        assert!(parse_ts_file(no_header).is_err());
        let bad_header = "@classLabel maybe a b\n@data\n1,2:a\n";
        assert!(parse_ts_file(bad_header).is_err());
        let bad_len = "@seriesLength 3\n@classLabel true a b\n@data\n1,2:a\n";
        assert!(parse_ts_file(bad_len).is_err());
        let unsorted = "@classLabel true 3 1 2\n@data\n1,2:1\n";
        assert!(parse_ts_file(unsorted).is_err());
    }

    #[test]
    fn numeric_labels_match_by_value() {
        let text = "@classLabel true 0.0 1.0 2.0\n@data\n1,2:1\n3,4:2.0\n";
        assert_eq!(parse_ts_file(text).unwrap().labels(), &[2, 3]);
    }

    #[test]
    fn regression_target() {
        let text = "@problemName r\n@targetlabel true\n@data\n1,2:0.5\n3,4:1.5\n";
        let reg = parse_ts_regression(text).unwrap();
        assert_eq!(reg.targets, vec![0.5, 1.5]);
        assert!(parse_ts_file(text).is_err());
        let ds = reg.discretize_thresholds(&[1.0]).unwrap();
        assert_eq!(ds.labels(), &[1, 2]);
    }

    #[test]
    fn serialize_reparses() {
        let text = "@problemName m\n@dimensions 2\n@classLabel true lo hi\n@data\n0.1,2e-7,3:4,5,-6.25:hi\n0,0,0:1,1,1:lo\n";
        let ds = parse_ts_file(text).unwrap();
        let again = parse_ts_file(&serialize_ts(&ds).unwrap()).unwrap();
        assert_eq!(ds, again);
    }
}
