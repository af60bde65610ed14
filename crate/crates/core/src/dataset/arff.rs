//! ARFF reader for Mulan-style multi-label corpora (dense and sparse rows).

use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::MultiLabelDataset;
use crate::{Error, Result};

/// Which ARFF attributes are labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSpec {
    /// Mulan XML file listing the label names.
    Xml(PathBuf),
    /// Label names given directly.
    Names(Vec<String>),
    /// The last `n` attributes are labels.
    Trailing(usize),
}

#[derive(Debug, Clone)]
enum AttrKind {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone)]
struct Attribute {
    name: String,
    kind: AttrKind,
}

impl Attribute {
    /// Numeric encoding of a raw token.
    fn encode(&self, token: &str, line: usize) -> Result<f64> {
        if token == "?" {
            return Err(Error::parse(
                line,
                format!("missing value for attribute `{}`", self.name),
            ));
        }
        match &self.kind {
            AttrKind::Numeric => token.parse::<f64>().map_err(|_| {
                Error::parse(line, format!("`{token}` is not numeric ({})", self.name))
            }),
            AttrKind::Nominal(values) => {
                if is_binary_domain(values) {
                    return match token {
                        "0" => Ok(0.0),
                        "1" => Ok(1.0),
                        _ => Err(Error::parse(
                            line,
                            format!("`{token}` is not in {{0,1}} ({})", self.name),
                        )),
                    };
                }
                values
                    .iter()
                    .position(|v| v == token)
                    .map(|i| i as f64)
                    .ok_or_else(|| {
                        Error::parse(
                            line,
                            format!("`{token}` is not a declared value of `{}`", self.name),
                        )
                    })
            }
        }
    }
}

fn is_binary_domain(values: &[String]) -> bool {
    values.len() == 2 && values.iter().any(|v| v == "0") && values.iter().any(|v| v == "1")
}

pub fn load_arff(data_path: impl AsRef<Path>, labels: &LabelSpec) -> Result<MultiLabelDataset> {
    let path = data_path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec = match labels {
        LabelSpec::Xml(xml) => {
            let xml_text = std::fs::read_to_string(xml).map_err(|e| Error::io(xml, e))?;
            LabelSpec::Names(parse_label_xml(&xml_text)?)
        }
        other => other.clone(),
    };
    parse_arff(&text, &spec)
}

/// Label names from a Mulan XML label file (every `<label name=...>` element,
/// including nested ones, in document order).
pub fn parse_label_xml(text: &str) -> Result<Vec<String>> {
    let doc = roxmltree::Document::parse(text)
        .map_err(|e| Error::LabelSpec(format!("malformed label XML: {e}")))?;
    let names: Vec<String> = doc
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "label")
        .filter_map(|n| n.attribute("name").map(str::to_string))
        .collect();
    if names.is_empty() {
        return Err(Error::LabelSpec("label XML lists no labels".into()));
    }
    Ok(names)
}

pub fn parse_arff(text: &str, labels: &LabelSpec) -> Result<MultiLabelDataset> {
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut saw_data = false;

    for (line_no, line) in lines.by_ref() {
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            continue;
        } else if lower.starts_with("@attribute") {
            attributes.push(parse_attribute(&line["@attribute".len()..], line_no)?);
        } else if lower.starts_with("@data") {
            saw_data = true;
            break;
        } else {
            return Err(Error::parse(line_no, format!("unexpected header line `{line}`")));
        }
    }
    if !saw_data {
        return Err(Error::parse(0, "missing @data section"));
    }

    let is_label = label_mask(&attributes, labels)?;
    for (attr, _) in attributes.iter().zip(&is_label).filter(|(_, &l)| l) {
        match &attr.kind {
            AttrKind::Nominal(v) if is_binary_domain(v) => {}
            _ => return Err(Error::NonBinaryLabel(attr.name.clone())),
        }
    }

    let width = attributes.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        rows.push(parse_row(line, line_no, &attributes, width)?);
    }

    let feature_cols: Vec<usize> = (0..width).filter(|&i| !is_label[i]).collect();
    let label_cols: Vec<usize> = (0..width).filter(|&i| is_label[i]).collect();
    let n = rows.len();
    let mut x = Array2::<f64>::zeros((n, feature_cols.len()));
    let mut y = Array2::<u8>::zeros((n, label_cols.len()));
    for (i, row) in rows.iter().enumerate() {
        for (c, &a) in feature_cols.iter().enumerate() {
            x[[i, c]] = row[a];
        }
        for (c, &a) in label_cols.iter().enumerate() {
            y[[i, c]] = row[a] as u8;
        }
    }
    MultiLabelDataset::new(
        x,
        y,
        feature_cols.iter().map(|&a| attributes[a].name.clone()).collect(),
        label_cols.iter().map(|&a| attributes[a].name.clone()).collect(),
    )
}

fn label_mask(attributes: &[Attribute], spec: &LabelSpec) -> Result<Vec<bool>> {
    let width = attributes.len();
    match spec {
        LabelSpec::Trailing(n) => {
            if *n >= width {
                return Err(Error::LabelSpec(format!(
                    "{n} trailing labels requested but only {width} attributes declared"
                )));
            }
            Ok((0..width).map(|i| i >= width - n).collect())
        }
        LabelSpec::Names(names) => {
            let mut mask = vec![false; width];
            for name in names {
                let idx = attributes
                    .iter()
                    .position(|a| &a.name == name)
                    .ok_or_else(|| Error::MissingLabel(name.clone()))?;
                mask[idx] = true;
            }
            Ok(mask)
        }
        LabelSpec::Xml(_) => Err(Error::LabelSpec(
            "XML label specs must be resolved before parsing".into(),
        )),
    }
}

fn parse_attribute(rest: &str, line: usize) -> Result<Attribute> {
    let rest = rest.trim();
    let (name, tail) = take_name(rest).ok_or_else(|| Error::parse(line, "missing attribute name"))?;
    let tail = tail.trim();
    let kind = if tail.starts_with('{') {
        let close = tail
            .rfind('}')
            .ok_or_else(|| Error::parse(line, "unterminated nominal domain"))?;
        let values = split_tokens(&tail[1..close], line)?;
        AttrKind::Nominal(values)
    } else {
        let ty = tail.split_whitespace().next().unwrap_or("");
        match ty.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => AttrKind::Numeric,
            _ => {
                return Err(Error::UnknownAttributeType {
                    name,
                    kind: ty.to_string(),
                    line,
                })
            }
        }
    };
    Ok(Attribute { name, kind })
}

/// Leading (possibly quoted) name and the remainder.
fn take_name(s: &str) -> Option<(String, &str)> {
    let first = s.chars().next()?;
    if first == '\'' || first == '"' {
        let end = s[1..].find(first)? + 1;
        Some((s[1..end].to_string(), &s[end + 1..]))
    } else {
        let end = s.find(|c: char| c.is_whitespace() || c == '{').unwrap_or(s.len());
        if end == 0 {
            return None;
        }
        Some((s[..end].to_string(), &s[end..]))
    }
}

/// Comma-separated tokens with optional single or double quotes.
fn split_tokens(s: &str, line: usize) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut quoted_token = false;
    for c in s.chars() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => cur.push(c),
            None => match c {
                '\'' | '"' => {
                    quote = Some(c);
                    quoted_token = true;
                }
                ',' => {
                    out.push(finish_token(&mut cur, &mut quoted_token));
                }
                _ => cur.push(c),
            },
        }
    }
    if quote.is_some() {
        return Err(Error::parse(line, "unterminated quote"));
    }
    if !cur.trim().is_empty() || quoted_token || !out.is_empty() {
        out.push(finish_token(&mut cur, &mut quoted_token));
    }
    Ok(out)
}

fn finish_token(cur: &mut String, quoted: &mut bool) -> String {
    let t = if *quoted {
        cur.clone()
    } else {
        cur.trim().to_string()
    };
    cur.clear();
    *quoted = false;
    t
}

fn parse_row(line: &str, line_no: usize, attributes: &[Attribute], width: usize) -> Result<Vec<f64>> {
    let mut row = vec![0.0; width];
    if let Some(body) = line.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| Error::parse(line_no, "unterminated sparse row"))?;
        for entry in split_tokens(body, line_no)? {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let (idx, value) = entry
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::parse(line_no, format!("bad sparse entry `{entry}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad sparse index `{idx}`")))?;
            let attr = attributes.get(idx).ok_or_else(|| {
                Error::parse(line_no, format!("sparse index {idx} out of range"))
            })?;
            let value = value.trim().trim_matches(|c| c == '\'' || c == '"');
            row[idx] = attr.encode(value, line_no)?;
        }
    } else {
        let tokens = split_tokens(line, line_no)?;
        if tokens.len() != width {
            return Err(Error::parse(
                line_no,
                format!("expected {width} values, found {}", tokens.len()),
            ));
        }
        for (slot, (tok, attr)) in row.iter_mut().zip(tokens.iter().zip(attributes)) {
            *slot = attr.encode(tok, line_no)?;
        }
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DENSE: &str = "\
% toy corpus
@relation toy
@attribute f0 numeric
@attribute 'f 1' real
@attribute l0 {0,1}
@attribute l1 {0,1}
@data
0.5,1.5,1,0
-1,2,0,1
3e-1,0,1,1
";

    #[test]
    fn dense_rows() {
        let ds = parse_arff(DENSE, &LabelSpec::Trailing(2)).unwrap();
        assert_eq!((ds.n_instances(), ds.n_features(), ds.n_labels()), (3, 2, 2));
        assert_eq!(ds.feature_names(), &["f0".to_string(), "f 1".to_string()]);
        assert_eq!(ds.features()[[2, 0]], 0.3);
        assert_eq!(ds.label_column(1), vec![0, 1, 1]);
    }

    #[test]
    fn sparse_rows_densify_with_zero() {
        let text = "@relation s\n@attribute a numeric\n@attribute b numeric\n\
                    @attribute x {0,1}\n@attribute y {0,1}\n@data\n{0 1.5, 3 1}\n{1 2}\n";
        let ds = parse_arff(text, &LabelSpec::Trailing(2)).unwrap();
        assert_eq!(ds.features().row(0).to_vec(), vec![1.5, 0.0]);
        assert_eq!(ds.labels().row(0).to_vec(), vec![0, 1]);
        assert_eq!(ds.labels().row(1).to_vec(), vec![0, 0]);
    }

    #[test]
    fn nominal_binary_feature_maps_to_01() {
        let text = "@relation s\n@attribute a {no,yes}\n@attribute b {1,0}\n\
                    @attribute x {0,1}\n@attribute y {0,1}\n@data\nyes,0,1,0\nno,1,0,1\n";
        let ds = parse_arff(text, &LabelSpec::Trailing(2)).unwrap();
        assert_eq!(ds.features().row(0).to_vec(), vec![1.0, 0.0]);
        assert_eq!(ds.features().row(1).to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn labels_by_name_from_xml() {
        let xml = r#"<?xml version="1.0" encoding="utf-8"?>
<labels xmlns="http://mulan.sourceforge.net/labels">
  <label name="l0"></label>
  <label name="l1"></label>
</labels>"#;
        let names = parse_label_xml(xml).unwrap();
        assert_eq!(names, vec!["l0", "l1"]);
        let ds = parse_arff(DENSE, &LabelSpec::Names(names)).unwrap();
        assert_eq!(ds.n_labels(), 2);
    }

    #[test]
    fn missing_xml_label_is_an_error() {
        let err = parse_arff(DENSE, &LabelSpec::Names(vec!["l0".into(), "l9".into()])).unwrap_err();
        assert!(matches!(err, Error::MissingLabel(ref n) if n == "l9"));
    }

    #[test]
    fn parse_error_reports_line() {
        let bad = DENSE.replace("-1,2,0,1", "-1,zz,0,1");
        match parse_arff(&bad, &LabelSpec::Trailing(2)).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 9),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn unknown_type_and_non_binary_label() {
        let text = DENSE.replace("@attribute f0 numeric", "@attribute f0 string");
        assert!(matches!(
            parse_arff(&text, &LabelSpec::Trailing(2)),
            Err(Error::UnknownAttributeType { .. })
        ));
        let text = DENSE.replace("@attribute l1 {0,1}", "@attribute l1 {0,1,2}");
        assert!(matches!(
            parse_arff(&text, &LabelSpec::Trailing(2)),
            Err(Error::NonBinaryLabel(_))
        ));
        let text = DENSE.replace("@attribute l1 {0,1}", "@attribute l1 numeric");
        assert!(matches!(
            parse_arff(&text, &LabelSpec::Trailing(2)),
            Err(Error::NonBinaryLabel(_))
        ));
    }
}
