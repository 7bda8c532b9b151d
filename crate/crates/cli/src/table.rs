//! The per-point variance table written by `variance`.

use std::io::{BufRead, Write};

use elm_uq::synthetic::fmt_real;
use elm_uq::variance::{EstimateTable, Estimator};

use crate::error::{CliError, CliResult};

const NA: &str = "NA";

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRow {
    pub point: usize,
    pub f_hat: f64,
    pub sigma2_fhat: Option<f64>,
    /// One entry per column in `VarianceTable::estimators`, floored at zero.
    pub values: Vec<Option<f64>>,
    pub flags: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTable {
    pub estimators: Vec<Estimator>,
    pub rows: Vec<VarianceRow>,
}

impl VarianceTable {
    pub fn from_estimates(t: &EstimateTable) -> Self {
        let m = t.ensemble_size;
        let unavailable: Vec<String> = t
            .estimators
            .iter()
            .filter(|e| m < e.min_members())
            .map(|e| format!("{e}:unavailable(M<{})", e.min_members()))
            .collect();
        let rows = (0..t.prediction.len())
            .map(|i| {
                let mut flags = unavailable.clone();
                let values = t
                    .values
                    .iter()
                    .zip(&t.estimators)
                    .map(|(col, e)| {
                        col[i].map(|v| {
                            if v.negative {
                                flags.push(format!("{e}:negative(raw={})", fmt_real(v.raw)));
                            }
                            v.value
                        })
                    })
                    .collect();
                VarianceRow {
                    point: i,
                    f_hat: t.prediction[i],
                    sigma2_fhat: t.sigma2_fhat.as_ref().map(|s| s[i]),
                    values,
                    flags: flags.join(";"),
                }
            })
            .collect();
        VarianceTable { estimators: t.estimators.clone(), rows }
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let cols: Vec<String> = self.estimators.iter().map(|e| format!("sigma2_{e}")).collect();
        writeln!(out, "point,f_hat,sigma2_fhat,{},flags", cols.join(","))?;
        let cell = |v: Option<f64>| v.map_or_else(|| NA.to_string(), fmt_real);
        for r in &self.rows {
            let vals: Vec<String> = r.values.iter().map(|v| cell(*v)).collect();
            writeln!(out, "{},{},{},{},{}", r.point, fmt_real(r.f_hat), cell(r.sigma2_fhat), vals.join(","), r.flags)?;
        }
        Ok(())
    }

    pub fn parse<R: BufRead>(input: R) -> CliResult<Self> {
        let mut lines = input.lines().enumerate();
        let bad = |line: usize, msg: &str| CliError::Data(format!("variance table, line {}: {msg}", line + 1));
        let (_, header) = lines.next().ok_or_else(|| CliError::Data("variance table is empty".into()))?;
        let header = header?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 4 || cols[..3] != ["point", "f_hat", "sigma2_fhat"] || cols[cols.len() - 1] != "flags" {
            return Err(bad(0, "unexpected header"));
        }
        let estimators = cols[3..cols.len() - 1]
            .iter()
            .map(|c| {
                c.strip_prefix("sigma2_")
                    .ok_or_else(|| bad(0, &format!("unexpected column '{c}'")))?
                    .parse::<Estimator>()
                    .map_err(|e| bad(0, &e.to_string()))
            })
            .collect::<CliResult<Vec<_>>>()?;

        let mut rows = Vec::new();
        for (ln, line) in lines {
            let line = line?;
            let fields: Vec<&str> = line.splitn(cols.len(), ',').collect();
            if fields.len() != cols.len() {
                return Err(bad(ln, &format!("expected {} fields, found {}", cols.len(), fields.len())));
            }
            let real = |s: &str| s.parse::<f64>().map_err(|_| bad(ln, &format!("cannot parse '{s}'")));
            let opt = |s: &str| if s == NA { Ok(None) } else { real(s).map(Some) };
            rows.push(VarianceRow {
                point: fields[0].parse().map_err(|_| bad(ln, "bad point id"))?,
                f_hat: real(fields[1])?,
                sigma2_fhat: opt(fields[2])?,
                values: fields[3..fields.len() - 1].iter().map(|s| opt(s)).collect::<CliResult<_>>()?,
                flags: fields[fields.len() - 1].to_string(),
            });
        }
        Ok(VarianceTable { estimators, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> VarianceTable {
        VarianceTable {
            estimators: vec![Estimator::BR, Estimator::S3],
            rows: vec![
                VarianceRow {
                    point: 0,
                    f_hat: 0.1 + 0.2,
                    sigma2_fhat: Some(1e-17),
                    values: vec![Some(0.0), None],
                    flags: "S3:unavailable(M<3);BR:negative(raw=-0.001)".into(),
                },
                VarianceRow { point: 1, f_hat: -2.5, sigma2_fhat: None, values: vec![Some(3.0), None], flags: String::new() },
            ],
        }
    }

    #[test]
    fn write_parse_write_is_identical() {
        let mut first = Vec::new();
        sample().write(&mut first).unwrap();
        let parsed = VarianceTable::parse(first.as_slice()).unwrap();
        assert_eq!(parsed, sample());
        let mut second = Vec::new();
        parsed.write(&mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn malformed_rows_are_reported() {
        let text = "point,f_hat,sigma2_fhat,sigma2_BR,flags\n0,1.0,NA,2.0,\n1,zz,NA,2.0,\n";
        let err = VarianceTable::parse(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(VarianceTable::parse("a,b\n".as_bytes()).is_err());
    }
}
