//! CSV ingestion: header `arm,s,l,x1,...,xk`, empty field = missing.

use std::io::Read;
use std::path::Path;

use super::{Record, ShortTermDataset};
use crate::error::{Error, Result};

pub fn read_csv(path: impl AsRef<Path>) -> Result<ShortTermDataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {e}", path.as_ref().display()),
    })?;
    parse_csv(file)
}

/// Strict parse; the first malformed row aborts with its line number.
pub fn parse_csv<R: Read>(input: R) -> Result<ShortTermDataset> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::None)
        .from_reader(input);

    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 3 || names[..3] != ["arm", "s", "l"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must start with arm,s,l; got {}", names.join(",")),
        });
    }
    for (i, name) in names[3..].iter().enumerate() {
        let expected = format!("x{}", i + 1);
        if *name != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("covariate column {} must be named {expected}, got {name}", i + 1),
            });
        }
    }
    let covariate_dim = names.len() - 3;

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Parse { line, message };

        let arm = match &row[0] {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("arm must be 0 or 1, got {other:?}"))),
        };
        let binary = |field: &str, name: &str| -> Result<Option<bool>> {
            match field {
                "" => Ok(None),
                "0" => Ok(Some(false)),
                "1" => Ok(Some(true)),
                other => Err(bad(format!("{name} must be 0, 1 or empty, got {other:?}"))),
            }
        };
        let s = binary(&row[1], "s")?;
        let l = binary(&row[2], "l")?;
        if l.is_some() && s.is_none() {
            return Err(bad("l observed while s is missing".into()));
        }
        let covariates = row
            .iter()
            .skip(3)
            .enumerate()
            .map(|(j, v)| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| bad(format!("x{} is not a finite number: {v:?}", j + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        records.push(Record {
            arm,
            s,
            l,
            covariates,
        });
    }
    ShortTermDataset::new(records, covariate_dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_missing_fields() {
        let data = parse_csv("arm,s,l,x1\n0,1,1,0.5\n1,0,,1.5\n1,,,2\n".as_bytes()).unwrap();
        assert_eq!(data.covariate_dim(), 1);
        let r = data.records();
        assert_eq!(r.len(), 3);
        assert_eq!((r[1].s, r[1].l), (Some(false), None));
        assert_eq!((r[2].s, r[2].l), (None, None));
        assert_eq!(r[2].covariates, vec![2.0]);
    }

    #[test]
    fn no_covariates() {
        let data = parse_csv("arm,s,l\n0,1,0\n".as_bytes()).unwrap();
        assert_eq!(data.covariate_dim(), 0);
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = parse_csv("arm,s,l\n0,1,1\n1,2,0\n".as_bytes()).unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, message: "s must be 0, 1 or empty, got \"2\"".into() });

        let err = parse_csv("arm,s,l,x1\n0,1,1,0.5\n0,,1,0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));

        let err = parse_csv("arm,s,l,x1\n0,1,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn header_checked() {
        assert!(parse_csv("arm,l,s\n".as_bytes()).is_err());
        assert!(parse_csv("arm,s,l,age\n".as_bytes()).is_err());
    }
}
