//! File formats: the long-format dataset CSV, the on-disk chain layout,
//! and the flat key-value run configuration.
//!
//! Chain directory layout (format version 1):
//!   meta.json        model name, sampler config, dimensions, time domain
//!   draws.csv        header = coordinate names, one row per stored draw
//!   acceptance.csv   g,i,j,proposals,accepts,rate,scale per latent coordinate

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Curve, FunctionalDataset};
use crate::registry::FitSettings;
use crate::sampler::{AcceptanceRecord, ChainDump, ModelDims, SamplerConfig};

/// A dataset together with the labels it carried on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: FunctionalDataset,
    pub group_ids: Vec<String>,
    pub curve_ids: Vec<Vec<String>>,
}

impl LabeledDataset {
    /// Wrap a dataset with positional labels.
    pub fn unlabeled(data: FunctionalDataset) -> Self {
        let group_ids = (0..data.n_groups()).map(|g| format!("g{g}")).collect();
        let curve_ids = (0..data.n_groups())
            .map(|g| {
                (0..data.curves_in_group(g))
                    .map(|i| format!("c{i}"))
                    .collect()
            })
            .collect();
        LabeledDataset {
            data,
            group_ids,
            curve_ids,
        }
    }
}

/// Parse the long-format dataset CSV: header `group_id,curve_id,t,y`,
/// groups and curves assembled in file order, times strictly increasing
/// within each curve.
pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    {
        let headers = reader.headers()?;
        let expected = ["group_id", "curve_id", "t", "y"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header group_id,curve_id,t,y, got {}", got.join(",")),
            });
        }
    }

    let mut group_ids: Vec<String> = Vec::new();
    let mut curve_ids: Vec<Vec<String>> = Vec::new();
    let mut raw: Vec<Vec<(Vec<f64>, Vec<f64>)>> = Vec::new();

    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 2; // header occupies line 1
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let group = record[0].to_string();
        let curve = record[1].to_string();
        let t: f64 = record[2].parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad t value '{}': {e}", &record[2]),
        })?;
        let y: f64 = record[3].parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad y value '{}': {e}", &record[3]),
        })?;
        if !t.is_finite() || !y.is_finite() {
            return Err(Error::Parse {
                line,
                msg: format!("non-finite observation ({t}, {y})"),
            });
        }

        let g = match group_ids.iter().position(|x| *x == group) {
            Some(g) => g,
            None => {
                group_ids.push(group);
                curve_ids.push(Vec::new());
                raw.push(Vec::new());
                group_ids.len() - 1
            }
        };
        let i = match curve_ids[g].iter().position(|x| *x == curve) {
            Some(i) => i,
            None => {
                curve_ids[g].push(curve);
                raw[g].push((Vec::new(), Vec::new()));
                curve_ids[g].len() - 1
            }
        };
        raw[g][i].0.push(t);
        raw[g][i].1.push(y);
    }

    if raw.is_empty() {
        return Err(Error::validation(format!(
            "{} holds no observations",
            path.display()
        )));
    }

    let mut t0 = f64::INFINITY;
    let mut tf = f64::NEG_INFINITY;
    for group in &raw {
        for (times, _) in group {
            if let (Some(first), Some(last)) = (times.first(), times.last()) {
                t0 = t0.min(*first);
                tf = tf.max(*last);
            }
        }
    }

    // name the offending curve on monotonicity violations before the
    // dataset constructor sees it
    for (g, group) in raw.iter().enumerate() {
        for (i, (times, _)) in group.iter().enumerate() {
            for w in times.windows(2) {
                if !(w[1] > w[0]) {
                    return Err(Error::validation(format!(
                        "curve '{}' in group '{}' has non-increasing times: {} -> {}",
                        curve_ids[g][i], group_ids[g], w[0], w[1]
                    )));
                }
            }
        }
    }

    let groups = raw
        .into_iter()
        .map(|group| {
            group
                .into_iter()
                .map(|(times, values)| Curve { times, values })
                .collect()
        })
        .collect();
    let data = FunctionalDataset::new(groups, t0, tf)?;
    Ok(LabeledDataset {
        data,
        group_ids,
        curve_ids,
    })
}

/// Write a dataset in the long format read by [`load_dataset`].
pub fn save_dataset(path: &Path, labeled: &LabeledDataset) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["group_id", "curve_id", "t", "y"])?;
    for (g, i, curve) in labeled.data.iter_curves() {
        for (t, y) in curve.times.iter().zip(&curve.values) {
            writer.write_record([
                labeled.group_ids[g].as_str(),
                labeled.curve_ids[g][i].as_str(),
                &format!("{t}"),
                &format!("{y}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

const CHAIN_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChainMeta {
    format_version: u32,
    model: String,
    config: SamplerConfig,
    dims: ModelDims,
    source_domain: (f64, f64),
    n_draws: usize,
    abort_reason: Option<String>,
}

/// Write a chain directory: meta.json, draws.csv, acceptance.csv.
pub fn write_chain(dir: &Path, dump: &ChainDump) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = ChainMeta {
        format_version: CHAIN_FORMAT_VERSION,
        model: dump.model.clone(),
        config: dump.config.clone(),
        dims: dump.dims.clone(),
        source_domain: dump.source_domain,
        n_draws: dump.draws.len(),
        abort_reason: dump.abort_reason.clone(),
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;

    let mut writer = csv::Writer::from_path(dir.join("draws.csv"))?;
    writer.write_record(&dump.names)?;
    let mut row = Vec::with_capacity(dump.names.len());
    for draw in &dump.draws {
        row.clear();
        row.extend(draw.iter().map(|v| format!("{v}")));
        writer.write_record(&row)?;
    }
    writer.flush()?;

    let mut acc = csv::Writer::from_path(dir.join("acceptance.csv"))?;
    acc.write_record(["g", "i", "j", "proposals", "accepts", "rate", "scale"])?;
    for r in &dump.acceptance {
        acc.write_record([
            r.g.to_string(),
            r.i.to_string(),
            r.j.to_string(),
            r.proposals.to_string(),
            r.accepts.to_string(),
            format!("{}", r.rate),
            format!("{}", r.scale),
        ])?;
    }
    acc.flush()?;
    Ok(())
}

/// Read a chain directory written by [`write_chain`].
pub fn read_chain(dir: &Path) -> Result<ChainDump> {
    let meta: ChainMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
    if meta.format_version != CHAIN_FORMAT_VERSION {
        return Err(Error::validation(format!(
            "chain format version {} unsupported (expected {CHAIN_FORMAT_VERSION})",
            meta.format_version
        )));
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(dir.join("draws.csv"))?;
    let names: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    let mut draws = Vec::with_capacity(meta.n_draws);
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(names.len());
        for v in record.iter() {
            row.push(v.parse::<f64>().map_err(|e| Error::Parse {
                line: row_idx + 2,
                msg: format!("bad draw value '{v}': {e}"),
            })?);
        }
        draws.push(row);
    }

    let mut acc_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(dir.join("acceptance.csv"))?;
    let mut acceptance = Vec::new();
    for record in acc_reader.records() {
        let r = record?;
        acceptance.push(AcceptanceRecord {
            g: r[0].parse().unwrap_or(0),
            i: r[1].parse().unwrap_or(0),
            j: r[2].parse().unwrap_or(0),
            proposals: r[3].parse().unwrap_or(0),
            accepts: r[4].parse().unwrap_or(0),
            rate: r[5].parse().unwrap_or(f64::NAN),
            scale: r[6].parse().unwrap_or(f64::NAN),
        });
    }

    Ok(ChainDump {
        model: meta.model,
        config: meta.config,
        dims: meta.dims,
        source_domain: meta.source_domain,
        names,
        draws,
        acceptance,
        abort_reason: meta.abort_reason,
    })
}

/// The flat key-value run configuration. Unknown keys are rejected so typos
/// fail loudly. All keys are optional; defaults are the production values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: String,
    pub p: usize,
    pub k: usize,
    pub q: usize,
    pub baseline_p: usize,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub adapt_target: f64,
    pub adapt_window: usize,
    pub jitter: f64,
    pub independence_weight: f64,
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub a_gamma: f64,
    pub b_gamma: f64,
    pub a_eps: f64,
    pub b_eps: f64,
    /// 0 means automatic (smallest mass keeping all shapes at 1 or above).
    pub warp_concentration: f64,
    pub warp_rate: f64,
    pub scale_mean_loc: f64,
    pub scale_mean_var: f64,
    pub shift_mean_loc: f64,
    pub shift_mean_var: f64,
    pub a_scale: f64,
    pub b_scale: f64,
    pub a_shift: f64,
    pub b_shift: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = FitSettings::production_defaults();
        RunConfig {
            model: "grouped".to_string(),
            p: s.p,
            k: s.k,
            q: s.q,
            baseline_p: s.baseline_p,
            n_iter: s.sampler.n_iter,
            burn_in: s.sampler.burn_in,
            thin: s.sampler.thin,
            seed: s.sampler.seed,
            adapt_target: s.sampler.adapt_target,
            adapt_window: s.sampler.adapt_window,
            jitter: s.sampler.jitter,
            independence_weight: s.sampler.independence_weight,
            a_lambda: s.a_lambda,
            b_lambda: s.b_lambda,
            a_gamma: s.a_gamma,
            b_gamma: s.b_gamma,
            a_eps: s.a_eps,
            b_eps: s.b_eps,
            warp_concentration: 0.0,
            warp_rate: s.warp_rate,
            scale_mean_loc: s.scale_mean_loc,
            scale_mean_var: s.scale_mean_var,
            shift_mean_loc: s.shift_mean_loc,
            shift_mean_var: s.shift_mean_var,
            a_scale: s.a_scale,
            b_scale: s.b_scale,
            a_shift: s.a_shift,
            b_shift: s.b_shift,
        }
    }
}

impl RunConfig {
    /// Parse a flat `key = value` configuration file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_str_flat(&text)
    }

    /// Parse from a string; one `key = value` pair per line, `#` comments.
    pub fn from_str_flat(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, serde_json::Value> = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected 'key = value', got '{raw_line}'"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().trim_matches('"');
            let json_value = if let Ok(n) = value.parse::<u64>() {
                serde_json::Value::from(n)
            } else if let Ok(f) = value.parse::<f64>() {
                serde_json::Value::from(f)
            } else {
                serde_json::Value::from(value)
            };
            map.insert(key, json_value);
        }
        let merged = serde_json::to_value(map)?;
        serde_json::from_value(merged).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    /// Render with every key and its current value, suitable as a template.
    pub fn to_flat_string(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let map = value.as_object().expect("config is a map");
        let mut out = String::new();
        for (k, v) in map {
            let rendered = match v {
                serde_json::Value::String(s) => format!("\"{s}\""),
                other => other.to_string(),
            };
            out.push_str(&format!("{k} = {rendered}\n"));
        }
        out
    }

    pub fn to_settings(&self) -> FitSettings {
        FitSettings {
            p: self.p,
            k: self.k,
            q: self.q,
            baseline_p: self.baseline_p,
            warp_concentration: if self.warp_concentration > 0.0 {
                Some(self.warp_concentration)
            } else {
                None
            },
            warp_rate: self.warp_rate,
            a_lambda: self.a_lambda,
            b_lambda: self.b_lambda,
            a_gamma: self.a_gamma,
            b_gamma: self.b_gamma,
            a_eps: self.a_eps,
            b_eps: self.b_eps,
            scale_mean_loc: self.scale_mean_loc,
            scale_mean_var: self.scale_mean_var,
            shift_mean_loc: self.shift_mean_loc,
            shift_mean_var: self.shift_mean_var,
            a_scale: self.a_scale,
            b_scale: self.b_scale,
            a_shift: self.a_shift,
            b_shift: self.b_shift,
            sampler: SamplerConfig {
                n_iter: self.n_iter,
                burn_in: self.burn_in,
                thin: self.thin,
                seed: self.seed,
                adapt_target: self.adapt_target,
                adapt_window: self.adapt_window,
                jitter: self.jitter,
                independence_weight: self.independence_weight,
                freeze_warps: false,
                shuffle_warp_order: false,
                allow_partial: false,
            },
        }
    }
}

/// Write a simple two-column CSV of (x, y) pairs with a custom header.
pub fn write_xy_csv(path: &Path, header: [&str; 2], rows: &[(f64, f64)]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for (x, y) in rows {
        writer.write_record([format!("{x}"), format!("{y}")])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::simulate_setting1_with;
    use crate::simulate::Setting1Params;

    #[test]
    fn dataset_roundtrip_is_exact() {
        let params = Setting1Params {
            curves_per_group: 2,
            n_obs: 17,
            ..Default::default()
        };
        let (data, _) = simulate_setting1_with(&params, 3).unwrap();
        let labeled = LabeledDataset::unlabeled(data);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        save_dataset(&path, &labeled).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(labeled, back);
    }

    #[test]
    fn two_row_file_single_curve() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(&path, "group_id,curve_id,t,y\na,x,0.0,1.5\na,x,1.0,2.5\n").unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.data.n_groups(), 1);
        assert_eq!(loaded.data.n_curves(), 1);
        assert_eq!(loaded.data.curve(0, 0).len(), 2);
        assert_eq!(loaded.group_ids, vec!["a"]);
    }

    #[test]
    fn ragged_curves_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        let mut text = String::from("group_id,curve_id,t,y\n");
        for i in 0..303 {
            text.push_str(&format!("g,a,{},0.5\n", i as f64 / 302.0));
        }
        for i in 0..591 {
            text.push_str(&format!("g,b,{},1.5\n", i as f64 / 590.0));
        }
        std::fs::write(&path, text).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.data.curve(0, 0).len(), 303);
        assert_eq!(loaded.data.curve(0, 1).len(), 591);
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "group_id,curve_id,t,y\na,x,0.0,1.0\na,x,oops,2.0\na,x,1.0,3.0\n",
        )
        .unwrap();
        match load_dataset(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_monotone_times_name_the_curve() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mono.csv");
        std::fs::write(
            &path,
            "group_id,curve_id,t,y\nctl,knee7,0.0,1.0\nctl,knee7,0.5,2.0\nctl,knee7,0.4,3.0\n",
        )
        .unwrap();
        match load_dataset(&path) {
            Err(Error::Validation(msg)) => {
                assert!(msg.contains("knee7"), "message: {msg}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn chain_roundtrip() {
        use crate::model::Hyperparams;
        use crate::sampler::run_chain;
        use crate::warping::elicit_identity;

        let bases = crate::basis::Bases::cubic(4, 4, 4).unwrap();
        let hyper = Hyperparams {
            a_lambda: 3.0,
            b_lambda: 3.0,
            a_gamma: 3.0,
            b_gamma: 3.0,
            a_eps: 3.0,
            b_eps: 3.0,
            warp: elicit_identity(&bases.warp, 3.0).unwrap(),
        };
        let times = crate::stats::unit_grid(12);
        let data = FunctionalDataset::new(
            vec![vec![Curve {
                times: times.clone(),
                values: times.iter().map(|t| t * 2.0).collect(),
            }]],
            0.0,
            1.0,
        )
        .unwrap();
        let config = SamplerConfig {
            n_iter: 14,
            burn_in: 6,
            seed: 55,
            ..Default::default()
        };
        let chain = run_chain(&data, &hyper, &bases, &config).unwrap();
        let dump = chain.dump();

        let dir = tempfile::tempdir().unwrap();
        let chain_dir = dir.path().join("chain");
        write_chain(&chain_dir, &dump).unwrap();
        let back = read_chain(&chain_dir).unwrap();
        assert_eq!(back.model, dump.model);
        assert_eq!(back.names, dump.names);
        assert_eq!(back.dims, dump.dims);
        // shortest-roundtrip float formatting preserves exact values
        assert_eq!(back.draws, dump.draws);
        assert_eq!(back.acceptance.len(), dump.acceptance.len());
    }

    #[test]
    fn config_parses_flat_keys_and_rejects_unknown() {
        let text = "model = \"shiftscale\"\np = 13\nk = 7\n# comment\nseed = 5\nb_eps = 0.5\n";
        let config = RunConfig::from_str_flat(text).unwrap();
        assert_eq!(config.model, "shiftscale");
        assert_eq!(config.p, 13);
        assert_eq!(config.k, 7);
        assert_eq!(config.seed, 5);
        assert_eq!(config.b_eps, 0.5);
        // untouched keys keep production defaults
        assert_eq!(config.n_iter, 25_000);
        assert_eq!(config.burn_in, 20_000);
        assert_eq!(config.a_eps, 3000.0);

        assert!(RunConfig::from_str_flat("not_a_key = 3\n").is_err());
        assert!(RunConfig::from_str_flat("p 13\n").is_err());
    }

    #[test]
    fn config_template_roundtrips() {
        let config = RunConfig::default();
        let text = config.to_flat_string();
        let back = RunConfig::from_str_flat(&text).unwrap();
        assert_eq!(serde_json::to_value(&config).unwrap(), serde_json::to_value(&back).unwrap());
    }
}
