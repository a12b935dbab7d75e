use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dtud::doe::{lhs, lhs_in_rule, SamplingPlan};
use dtud::manifest::{manifest_path, write_atomic, RunManifest};
use dtud::metrics::{
    avgstiff, peak_force, peak_intrusion, sea, total_mass, ForceDeflectionCurve,
    IntrusionHistories, ResponseRecord, SurrogateSpec, AVGSTIFF, INTRUSION, MASS, PEAK_FORCE, SEA,
};
use dtud::morph::{apply_morph, control_points, fit_morph_regularized, load_points, points_csv};
use dtud::pipeline::{run_demo, DemoConfig};
use dtud::rules::{dataset_bounds, mine_rules, screen_designs, screening_csv, RulesReport};
use dtud::tree::{build_tree, classify, k_fold_cv, predict_label, training_accuracy, DtudTree, TreeConfig};
use dtud::uncertain::{load_dataset, load_designs, Dataset};
use dtud::{Error, Result};

#[derive(Parser)]
#[command(name = "dtud", version, about = "Decision trees for uncertain design data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct TreeFlags {
    /// Relative deviation R of every attribute (0 = certain data).
    #[arg(long, default_value_t = 0.0)]
    uncertainty: f64,
    #[arg(long, default_value_t = 6)]
    max_layers: usize,
    /// Candidate split points per attribute and node.
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TreeFlags {
    fn config(&self) -> TreeConfig {
        TreeConfig {
            max_layers: self.max_layers,
            n_split_points: self.splits,
            seed: self.seed,
            ..TreeConfig::default()
        }
    }

    fn record(&self, m: &mut RunManifest) {
        m.flag("uncertainty", self.uncertainty)
            .flag("max-layers", self.max_layers)
            .flag("splits", self.splits)
            .flag("seed", self.seed);
        m.seed = Some(self.seed);
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a tree on a labeled CSV and print its training accuracy.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        tree: TreeFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// List target-label branches with ACC/CTT and select a design rule.
    Rules {
        #[arg(long)]
        tree: PathBuf,
        /// The training CSV the tree was built from.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        uncertainty: f64,
        #[arg(long, default_value = "g")]
        label: String,
        #[arg(long, default_value_t = dtud::rules::DEFAULT_THETA)]
        min_lp: f64,
        /// JSON object of global bounds, `{"x": [lo, hi], ...}`; defaults to
        /// the extent of the training data.
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Latin hypercube designs inside a rule box or a bounds file.
    Sample {
        #[arg(long, conflicts_with = "bounds", required_unless_present = "bounds")]
        rules: Option<PathBuf>,
        /// Branch id; defaults to the selected one.
        #[arg(long, requires = "rules")]
        branch: Option<String>,
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank designs by the probability of a label and keep the best.
    Screen {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        designs: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        uncertainty: f64,
        #[arg(long, default_value = "g")]
        label: String,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label-probability vectors for every design.
    Classify {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        designs: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        uncertainty: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Crash response metrics from curves, intrusion histories and masses.
    Metrics {
        /// `u_m,F_kN` force-deflection curve.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Part mass in kg for SEA.
        #[arg(long, requires = "curve")]
        mass: Option<f64>,
        /// `t_s,s1_mm,s2_mm,s3_mm,s4_mm` intrusion histories.
        #[arg(long)]
        histories: Option<PathBuf>,
        /// Comma-separated component masses in kg.
        #[arg(long, value_delimiter = ',')]
        masses: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Morph a node cloud with a thin-plate-spline map fitted to control points.
    Morph {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        displaced: PathBuf,
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        regularization: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded k-fold cross-validation.
    Cv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[command(flatten)]
        tree: TreeFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full surrogate pipeline: train, select rules, sample, screen, recombine.
    Demo {
        /// Surrogate spec JSON; defaults to the bundled one.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        uncertainty: Option<f64>,
        #[arg(long)]
        max_layers: Option<usize>,
        #[arg(long, default_value_t = 10)]
        splits: usize,
        #[arg(long, default_value_t = dtud::rules::DEFAULT_THETA)]
        min_lp: f64,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Train { .. } => "train",
            Command::Rules { .. } => "rules",
            Command::Sample { .. } => "sample",
            Command::Screen { .. } => "screen",
            Command::Classify { .. } => "classify",
            Command::Metrics { .. } => "metrics",
            Command::Morph { .. } => "morph",
            Command::Cv { .. } => "cv",
            Command::Demo { .. } => "demo",
            Command::Replay { .. } => "replay",
        }
    }
}

fn emit(out: &Path, text: &str, mut manifest: RunManifest) -> Result<()> {
    write_atomic(out, text.as_bytes())?;
    manifest.outputs.push(out.display().to_string());
    write_atomic(manifest_path(out), manifest.to_json().as_bytes())
}

fn read_bounds(path: &Path, attributes: &[String]) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    let map: BTreeMap<String, (f64, f64)> = serde_json::from_str(&text)?;
    attributes
        .iter()
        .map(|a| {
            map.get(a)
                .copied()
                .filter(|(lo, hi)| lo < hi)
                .ok_or_else(|| Error::Format(format!("{}: missing or unordered bounds for '{a}'", path.display())))
        })
        .collect()
}

fn designs_csv(attributes: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = attributes.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn check_designs(tree: &DtudTree, designs: &Dataset) -> Result<()> {
    if designs.attribute_names != tree.attributes {
        return Err(Error::Schema(format!(
            "design columns {:?} do not match tree attributes {:?}",
            designs.attribute_names, tree.attributes
        )));
    }
    Ok(())
}

fn run(cmd: Command, argv: Vec<String>) -> Result<()> {
    let mut m = RunManifest::new(cmd.name(), argv);
    match cmd {
        Command::Train { data, tree, out } => {
            m.input(&data)?;
            tree.record(&mut m);
            let d = load_dataset(&data, tree.uncertainty, None)?;
            let t = build_tree(&d, &tree.config())?;
            let acc = training_accuracy(&t, &d)?;
            println!(
                "training accuracy {acc:.4} ({} tuples, {} leaves, depth {})",
                d.len(),
                t.n_leaves(),
                t.depth()
            );
            emit(&out, &t.to_json(), m)
        }
        Command::Rules { tree, data, uncertainty, label, min_lp, bounds, out } => {
            m.input(&tree)?.input(&data)?;
            m.flag("uncertainty", uncertainty).flag("label", &label).flag("min-lp", min_lp);
            let t = DtudTree::load(&tree)?;
            let d = load_dataset(&data, uncertainty, Some(&t.labels))?;
            if d.attribute_names != t.attributes {
                return Err(Error::Schema("data columns do not match tree attributes".into()));
            }
            let b = match &bounds {
                Some(p) => {
                    m.input(p)?;
                    read_bounds(p, &t.attributes)?
                }
                None => dataset_bounds(&d),
            };
            let (report, rule) = mine_rules(&t, &d, &b, &label, min_lp)?;
            println!("selected {} (acc {:.4}, ctt {:.4})", rule.id, rule.acc, rule.ctt);
            emit(&out, &report.to_json(), m)
        }
        Command::Sample { rules, branch, bounds, n, seed, out } => {
            m.flag("n", n).flag("seed", seed);
            m.seed = Some(seed);
            let (attributes, rows) = if let Some(p) = rules {
                m.input(&p)?;
                let text = std::fs::read_to_string(&p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
                let report = RulesReport::from_json(&text)?;
                let attributes = report.attributes();
                let id = branch.unwrap_or_else(|| report.selected.clone());
                m.flag("branch", &id);
                let rule = report.rule(&id, &attributes)?;
                (attributes, lhs_in_rule(&rule, n, seed)?)
            } else {
                let p = bounds.expect("clap enforces rules or bounds");
                m.input(&p)?;
                let text = std::fs::read_to_string(&p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
                let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text)?;
                let attributes: Vec<String> = map.keys().cloned().collect();
                let b = read_bounds(&p, &attributes)?;
                (attributes, lhs(&SamplingPlan { bounds: b, n, seed })?)
            };
            emit(&out, &designs_csv(&attributes, &rows), m)
        }
        Command::Screen { tree, designs, uncertainty, label, top, out } => {
            m.input(&tree)?.input(&designs)?;
            m.flag("uncertainty", uncertainty).flag("label", &label).flag("top", top);
            let t = DtudTree::load(&tree)?;
            let d = load_designs(&designs, uncertainty)?;
            check_designs(&t, &d)?;
            let ranked = screen_designs(&t, &d.tuples, &label, top)?;
            emit(&out, &screening_csv(&t.labels, &ranked), m)
        }
        Command::Classify { tree, designs, uncertainty, out } => {
            m.input(&tree)?.input(&designs)?;
            m.flag("uncertainty", uncertainty);
            let t = DtudTree::load(&tree)?;
            let d = load_designs(&designs, uncertainty)?;
            check_designs(&t, &d)?;
            let mut order: Vec<usize> = (0..t.labels.len()).collect();
            order.sort_by(|&a, &b| t.labels[b].cmp(&t.labels[a]));
            let mut text = String::from("id");
            for &i in &order {
                text.push_str(&format!(",lp_{}", t.labels[i]));
            }
            text.push_str(",label\n");
            for tuple in &d.tuples {
                let lp = classify(&t, tuple)?;
                text.push_str(&tuple.id);
                for &i in &order {
                    text.push_str(&format!(",{}", lp[i]));
                }
                text.push_str(&format!(",{}\n", t.labels[predict_label(&lp)]));
            }
            emit(&out, &text, m)
        }
        Command::Metrics { curve, mass, histories, masses, out } => {
            let mut rec = ResponseRecord::default();
            if let Some(p) = &curve {
                m.input(p)?;
                let c = ForceDeflectionCurve::load(p)?;
                rec.insert(PEAK_FORCE, peak_force(c.force())?)?;
                rec.insert(AVGSTIFF, avgstiff(&c)?)?;
                rec.insert("energy_kJ", c.energy())?;
                if let Some(mass) = mass {
                    m.flag("mass", mass);
                    rec.insert(SEA, sea(&c, mass)?)?;
                }
            }
            if let Some(p) = &histories {
                m.input(p)?;
                rec.insert(INTRUSION, peak_intrusion(&IntrusionHistories::load(p)?))?;
            }
            if !masses.is_empty() {
                let list: Vec<String> = masses.iter().map(f64::to_string).collect();
                m.flag("masses", list.join(","));
                rec.insert(MASS, total_mass(&masses)?)?;
            }
            if curve.is_none() && histories.is_none() && masses.is_empty() {
                return Err(Error::InvalidParameter(
                    "give at least one of --curve, --histories, --masses".into(),
                ));
            }
            let text = serde_json::to_string_pretty(&rec)?;
            println!("{}", serde_json::to_string(&rec)?);
            emit(&out, &text, m)
        }
        Command::Morph { original, displaced, nodes, regularization, out } => {
            m.input(&original)?.input(&displaced)?.input(&nodes)?;
            m.flag("regularization", regularization);
            let cps = control_points(load_points(&original)?, load_points(&displaced)?)?;
            let map = fit_morph_regularized(&cps, regularization)?;
            let cloud = load_points(&nodes)?;
            let coords: Vec<[f64; 3]> = cloud.iter().map(|(_, p)| *p).collect();
            let moved: Vec<(String, [f64; 3])> = cloud
                .into_iter()
                .zip(apply_morph(&map, &coords))
                .map(|((id, _), p)| (id, p))
                .collect();
            eprintln!("condition estimate {:.3e}", map.condition);
            emit(&out, &points_csv(&moved), m)
        }
        Command::Cv { data, k, tree, out } => {
            m.input(&data)?;
            tree.record(&mut m);
            m.flag("k", k);
            let d = load_dataset(&data, tree.uncertainty, None)?;
            let report = k_fold_cv(&d, k, &tree.config())?;
            println!("mean accuracy {:.4} over {k} folds", report.mean_accuracy);
            emit(&out, &serde_json::to_string_pretty(&report)?, m)
        }
        Command::Demo { spec, seed, uncertainty, max_layers, splits, min_lp, top, out } => {
            let s = match &spec {
                Some(p) => {
                    m.input(p)?;
                    SurrogateSpec::load(p)?
                }
                None => SurrogateSpec::bundled(),
            };
            m.flag("seed", seed).flag("splits", splits).flag("min-lp", min_lp).flag("top", top);
            if let Some(u) = uncertainty {
                m.flag("uncertainty", u);
            }
            if let Some(l) = max_layers {
                m.flag("max-layers", l);
            }
            m.seed = Some(seed);
            let cfg = DemoConfig {
                seed,
                theta: min_lp,
                top_k: top,
                n_split_points: splits,
                uncertainty,
                max_layers,
                ..DemoConfig::default()
            };
            let result = run_demo(&s, &cfg)?;
            for c in &result.components {
                println!(
                    "{}: {} leaves, training accuracy {:.4}, rule {} (acc {:.4}, ctt {:.4}{}), mean lp(g) {:.4} -> {:.4}",
                    c.name,
                    c.tree.n_leaves(),
                    c.training_accuracy,
                    c.rule.id,
                    c.rule.acc,
                    c.rule.ctt,
                    if c.fallback { ", threshold lowered" } else { "" },
                    c.mean_lp_all(),
                    c.mean_lp_screened()
                );
            }
            let written = result.write(&out)?;
            m.outputs = written.iter().map(|p| p.display().to_string()).collect();
            write_atomic(out.join("run.manifest.json"), m.to_json().as_bytes())
        }
        Command::Replay { manifest } => {
            let recorded = RunManifest::load(&manifest)?;
            let changed = recorded.changed_inputs()?;
            if !changed.is_empty() {
                return Err(Error::Format(format!("inputs changed since the run: {}", changed.join(", "))));
            }
            let cli = Cli::try_parse_from(&recorded.argv)
                .map_err(|e| Error::Format(format!("manifest argv does not parse: {}", e.kind())))?;
            if matches!(cli.command, Command::Replay { .. }) {
                return Err(Error::Format("a manifest cannot replay a replay".into()));
            }
            run(cli.command, recorded.argv)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("DTUD_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("DTUD_THREADS='{v}' is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    Ok(())
}

fn fail(e: &Error) -> ExitCode {
    let msg = e.to_string().replace('\n', " ");
    eprintln!("error kind={} code={} message={:?}", e.kind(), e.exit_code(), msg);
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error kind=usage code=5 message={first:?}");
            return ExitCode::from(5);
        }
    };
    if let Err(e) = configure_threads() {
        return fail(&e);
    }
    match run(cli.command, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
