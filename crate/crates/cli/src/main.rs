mod args;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use bncc::chain::{train_method, TrainedModel};
use bncc::correlation::dependence_matrix_with;
use bncc::dataset::{read_label_matrix, synth, write_csv, write_label_matrix, SynthEdge, SynthSpec};
use bncc::graph::{export_dot_with_comment, fully_connected_dcg};
use bncc::metrics::{compare, cross_validate, evaluate, Comparison, CvConfig};
use bncc::structure::build_order;
use bncc::{Error, Result};
use clap::error::ErrorKind;
use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use args::{method_config, Cli, Command};

#[derive(Serialize, Deserialize)]
struct ModelBundle {
    config: Value,
    model: TrainedModel,
}

fn write_out(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            }),
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn to_json(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn names(ds_names: &[String], idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| ds_names[i].clone()).collect()
}

fn run(cli: &Cli) -> Result<()> {
    let config = serde_json::to_value(cli)?;
    let config_line = format!("config: {}", serde_json::to_string(&config)?);
    let exec = cli.execution();

    match &cli.command {
        Command::Depmat { data, out_csv, out_dot } => {
            let ds = data.load()?;
            let dep = dependence_matrix_with(&ds, exec);
            write_out(out_csv.as_deref(), &format!("# {config_line}\n{}", dep.to_csv()))?;
            if let Some(p) = out_dot {
                let dot = export_dot_with_comment(&fully_connected_dcg(&dep), Some(&config_line));
                write_out(Some(p), &dot)?;
            }
        }
        Command::Order { data, search, out_dir } => {
            let ds = data.load()?;
            let cfg = search.config(exec);
            cfg.validate()?;
            let bn = build_order(&ds, &cfg)?;
            fs::create_dir_all(out_dir).map_err(|e| Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            let labels = ds.label_names();
            let order = json!({
                "config": config,
                "order": names(labels, bn.order.as_slice()),
                "initial_order": names(labels, bn.diagnostics.initial_order.as_slice()),
            });
            write_out(Some(&out_dir.join("order.json")), &to_json(&order)?)?;
            let dot = export_dot_with_comment(&bn.final_dag, Some(&config_line));
            write_out(Some(&out_dir.join("dag.dot")), &dot)?;
            let scores = json!({ "config": config, "diagnostics": bn.diagnostics });
            write_out(Some(&out_dir.join("scores.json")), &to_json(&scores)?)?;
        }
        Command::Train { data, model, out } => {
            let cfg = method_config(&model.learner, &model.search, &model.ensemble, model.seed, exec)?;
            let ds = data.load()?;
            let trained = train_method(model.method, &ds, &cfg)?;
            let bundle = ModelBundle {
                config: json!({ "run": config, "resolved": cfg }),
                model: trained,
            };
            write_out(Some(out), &to_json(&bundle)?)?;
        }
        Command::Predict { model, data, out } => {
            let bundle: ModelBundle = serde_json::from_str(&read_file(model)?)?;
            let ds = data.load()?;
            let pred = bundle.model.predict_rows(ds.features().view())?;
            let mut buf = Vec::new();
            write_label_matrix(bundle.model.label_names(), pred.view(), &mut buf, Some(&config_line))?;
            write_out(out.as_deref(), &String::from_utf8_lossy(&buf))?;
        }
        Command::Eval { data, model, predictions, out } => {
            let ds = data.load()?;
            let pred = match (model, predictions) {
                (Some(m), _) => {
                    let bundle: ModelBundle = serde_json::from_str(&read_file(m)?)?;
                    bundle.model.predict_rows(ds.features().view())?
                }
                (None, Some(p)) => {
                    let (_, y) = read_label_matrix(read_file(p)?.as_bytes())?;
                    y
                }
                (None, None) => return Err(Error::Config("eval needs --model or --predictions".into())),
            };
            let report = evaluate(ds.labels().view(), pred.view())?;
            write_out(out.as_deref(), &to_json(&json!({ "config": config, "report": report }))?)?;
        }
        Command::Xval { data, model, cv, out, table } => {
            let cfg = method_config(&model.learner, &model.search, &model.ensemble, model.seed, exec)?;
            let cvc = CvConfig {
                k: cv.k,
                repeats: cv.repeats,
                seed: cv.cv_seed,
                execution: exec,
            };
            let ds = data.load()?;
            let summary = cross_validate(&ds, model.method, &cvc, &cfg)?;
            write_out(out.as_deref(), &to_json(&json!({ "config": config, "summary": summary }))?)?;
            if let Some(t) = table {
                let c = Comparison { summaries: vec![summary] };
                write_out(Some(t), &format!("# {config_line}\n{}", c.to_table()))?;
            }
        }
        Command::Compare { data, methods, learner, search, ensemble, cv, out, table } => {
            if methods.is_empty() {
                return Err(Error::Config("no methods to compare".into()));
            }
            let cfg = method_config(learner, search, ensemble, cv.cv_seed, exec)?;
            let cvc = CvConfig {
                k: cv.k,
                repeats: cv.repeats,
                seed: cv.cv_seed,
                execution: exec,
            };
            let ds = data.load()?;
            let cmp = compare(&ds, methods, &cvc, &cfg)?;
            write_out(out.as_deref(), &to_json(&json!({ "config": config, "comparison": cmp }))?)?;
            let text = format!("# {config_line}\n{}", cmp.to_table());
            match table {
                Some(t) => write_out(Some(t), &text)?,
                None if out.is_some() => write_out(None, &text)?,
                None => {}
            }
        }
        Command::Synth { labels, instances, features, edges, flip, base, noise, seed, out_csv, out_dot } => {
            let edges = edges
                .iter()
                .map(|e| parse_edge(e, *flip))
                .collect::<Result<Vec<_>>>()?;
            let spec = SynthSpec {
                n_labels: *labels,
                n_instances: *instances,
                n_features: features.unwrap_or(*labels),
                edges,
                base_prob: *base,
                feature_noise: *noise,
                seed: *seed,
            };
            let (ds, dag) = synth(&spec)?;
            let mut buf = Vec::new();
            write_csv(&ds, &mut buf, Some(&config_line))?;
            write_out(out_csv.as_deref(), &String::from_utf8_lossy(&buf))?;
            if let Some(p) = out_dot {
                write_out(Some(p), &export_dot_with_comment(&dag, Some(&config_line)))?;
            }
        }
    }
    Ok(())
}

fn parse_edge(s: &str, flip_prob: f64) -> Result<SynthEdge> {
    let bad = || Error::Config(format!("edge `{s}` is not of the form parent>child"));
    let (p, c) = s.split_once('>').ok_or_else(bad)?;
    Ok(SynthEdge {
        parent: p.trim().parse().map_err(|_| bad())?,
        child: c.trim().parse().map_err(|_| bad())?,
        flip_prob,
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownMethod(_) => 1,
        Error::NonFinite => 3,
        _ => 2,
    }
}

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let err = json!({ "error": kind, "message": message.trim_end(), "exit_code": code });
    eprintln!("{err}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report("usage", &e.render().to_string(), 1),
    };

    #[cfg(feature = "parallel")]
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            return report("usage", &e.to_string(), 1);
        }
    }

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let kind = match code {
                1 => "usage",
                3 => "numeric",
                _ => "data",
            };
            report(kind, &e.to_string(), code)
        }
    }
}
