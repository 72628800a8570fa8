//! CSV report rows with a frozen header.

use std::io::Write;

use crate::error::LabResult;

pub const HEADER: [&str; 6] = ["experiment", "param_json", "metric", "value", "stderr", "pass"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub param_json: String,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub pass: Option<bool>,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[ReportRow]) -> LabResult<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.as_str(),
            r.param_json.as_str(),
            r.metric.as_str(),
            &format_float(r.value),
            &r.stderr.map(format_float).unwrap_or_default(),
            match r.pass {
                Some(true) => "true",
                Some(false) => "false",
                None => "",
            },
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn to_csv_string(rows: &[ReportRow]) -> LabResult<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Collects rows for one experiment run, sharing the parameter echo.
#[derive(Debug)]
pub struct RowSink {
    experiment: String,
    echo: String,
    rows: Vec<ReportRow>,
}

impl RowSink {
    pub fn new(experiment: &str, echo: String) -> Self {
        Self { experiment: experiment.into(), echo, rows: Vec::new() }
    }

    pub fn push(&mut self, metric: impl Into<String>, value: f64, stderr: Option<f64>, pass: Option<bool>) {
        self.rows.push(ReportRow {
            experiment: self.experiment.clone(),
            param_json: self.echo.clone(),
            metric: metric.into(),
            value,
            stderr,
            pass,
        });
    }

    pub fn value(&mut self, metric: impl Into<String>, value: f64) {
        self.push(metric, value, None, None);
    }

    /// A row with its own parameter echo.
    pub fn push_with_echo(&mut self, echo: String, metric: impl Into<String>, value: f64, pass: Option<bool>) {
        self.rows.push(ReportRow {
            experiment: self.experiment.clone(),
            param_json: echo,
            metric: metric.into(),
            value,
            stderr: None,
            pass,
        });
    }

    pub fn finish(self) -> Vec<ReportRow> {
        self.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, f64::MIN_POSITIVE] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn csv_layout() {
        let mut s = RowSink::new("picard", r#"{"alpha":0.25}"#.into());
        s.push("gap", 0.5, Some(0.1), Some(true));
        s.value("n", 3.0);
        let text = to_csv_string(&s.finish()).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], "experiment,param_json,metric,value,stderr,pass");
        assert_eq!(lines[1], r#"picard,"{""alpha"":0.25}",gap,5.0000000000000000e-1,1.0000000000000001e-1,true"#);
        assert_eq!(lines[2], r#"picard,"{""alpha"":0.25}",n,3.0000000000000000e0,,"#);
        assert!(!text.contains('\r'));
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rd.records().count(), 2);
    }
}
