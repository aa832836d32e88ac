use std::fmt::{self, Write as _};
use std::fs;
use std::str::FromStr;

use super::run::{run_evaluation, Channel, EvalReport};
use crate::config::{AlphaSetting, RunConfig};
use crate::error::{Error, Result};
use crate::textfmt::sig9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Sigma,
    Alpha,
    AmvGrid,
    HspBins,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Sigma => "sigma",
            SweepParam::Alpha => "alpha",
            SweepParam::AmvGrid => "amv_grid",
            SweepParam::HspBins => "hsp_bins",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sigma" => Ok(SweepParam::Sigma),
            "alpha" => Ok(SweepParam::Alpha),
            "amv_grid" | "amv-grid" => Ok(SweepParam::AmvGrid),
            "hsp_bins" | "hsp-bins" => Ok(SweepParam::HspBins),
            _ => Err(format!("cannot sweep `{s}` (sigma, alpha, amv_grid, hsp_bins)")),
        }
    }
}

/// Applies one sweep value through the config parser, so values obey the
/// same validation as a config file.
pub fn with_value(cfg: &RunConfig, param: SweepParam, value: &str) -> Result<RunConfig> {
    let mut c = cfg.clone();
    c.set(param.as_str(), value, &cfg.output_dir)?;
    c.validate()?;
    if param == SweepParam::Alpha && matches!(c.alpha, AlphaSetting::Auto) {
        return Err(Error::type_error("alpha", "sweep values must be numeric"));
    }
    Ok(c)
}

/// One evaluation per value, each in `<output_dir>/<param>_<value>/`, plus
/// `<output_dir>/sweep_<param>.csv`.
pub fn sweep_parameter(
    cfg: &RunConfig,
    param: SweepParam,
    values: &[String],
    threads: usize,
) -> Result<Vec<(String, EvalReport)>> {
    if values.is_empty() {
        return Err(Error::InvalidParams("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|v| {
            let mut c = with_value(cfg, param, v)?;
            c.output_dir = cfg.output_dir.join(format!("{param}_{v}"));
            Ok((v.clone(), c))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut reports = Vec::with_capacity(configs.len());
    for (v, c) in configs {
        reports.push((v, run_evaluation(&c, threads)?));
    }
    let path = cfg.output_dir.join(format!("sweep_{param}.csv"));
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::write_io(&cfg.output_dir, e))?;
    fs::write(&path, sweep_csv(&reports)).map_err(|e| Error::write_io(&path, e))?;
    Ok(reports)
}

pub fn sweep_csv(reports: &[(String, EvalReport)]) -> String {
    let mut out = String::from("value,eer_primary,eer_soft,eer_fused\n");
    for (v, r) in reports {
        let e = |c| r.eer(c).map(sig9).unwrap_or_default();
        let _ = writeln!(
            out,
            "{v},{},{},{}",
            e(Channel::Primary),
            e(Channel::Soft),
            e(Channel::Fused)
        );
    }
    out
}
