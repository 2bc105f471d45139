//! One function per subcommand. Each turns a validated configuration into
//! a [`Report`]; writing files is left to the caller.

use std::f64::consts::PI;

use bjpa_core::circuit::{self, BlochniumDesign, EffectiveModel};
use bjpa_core::constants::{dbm_to_watts, PLANCK};
use bjpa_core::gain::{gain_map, SignalProbe};
use bjpa_core::metrics::{self, CompressionOptions, P1dBResult, PhysicalScale, TuningPoint};
use bjpa_core::optimize::{self, Candidate, Phase};
use bjpa_core::steady_state::{bifurcation_threshold, photon_number_roots, PumpDrive};
use bjpa_core::sweep::{self, MetricValue, Param};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{Cell, Report, Table};
use crate::svg::{Heat, Panel, Series};
use crate::{CliError, Command};

pub fn dispatch(cmd: Command, cfg: &RunConfig, seed: Option<u64>) -> Result<Report, CliError> {
    match cmd {
        Command::Model => model(cfg),
        Command::PhotonNumber => photon_number(cfg),
        Command::Gain => gain(cfg),
        Command::P1db => p1db(cfg),
        Command::Tune => tune(cfg),
        Command::Compare => compare(cfg),
        Command::Optimize => optimize(cfg, seed),
        Command::Sweep => sweep(cfg),
    }
}

fn block<'a, T>(b: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    b.as_ref()
        .ok_or_else(|| CliError::Config(format!("{name}: block is required for this command")))
}

fn to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e9)
}

fn to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}

/// Effective model in ordinary frequency units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelReport {
    pub nodes: usize,
    pub junctions: u64,
    pub flux_bias: f64,
    pub omega_eff_ghz: f64,
    pub kerr_hz: f64,
    pub e_c_ghz: f64,
    pub kappa_mhz: f64,
    pub kerr_over_kappa: f64,
    /// Coupling rate estimated from the coupling capacitance and Z0.
    pub kappa_estimate_mhz: f64,
}

impl ModelReport {
    pub fn new(design: &BlochniumDesign, m: &EffectiveModel) -> Self {
        // Adding zero turns a −0 from α_c = 1 into +0.
        Self {
            nodes: design.node_count(),
            junctions: design.junction_count(),
            flux_bias: design.flux_bias,
            omega_eff_ghz: to_ghz(m.omega_eff),
            kerr_hz: m.kerr_k / (2.0 * PI) + 0.0,
            e_c_ghz: m.e_c / PLANCK / 1e9,
            kappa_mhz: to_mhz(m.kappa),
            kerr_over_kappa: m.kerr_over_kappa() + 0.0,
            kappa_estimate_mhz: to_mhz(circuit::estimate_kappa(design, m.omega_eff)),
        }
    }

    const HEADER: [&'static str; 9] = [
        "nodes",
        "junctions",
        "flux_bias",
        "omega_eff_ghz",
        "kerr_hz",
        "e_c_ghz",
        "kappa_mhz",
        "kerr_over_kappa",
        "kappa_estimate_mhz",
    ];

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.nodes.into(),
            self.junctions.into(),
            self.flux_bias.into(),
            self.omega_eff_ghz.into(),
            self.kerr_hz.into(),
            self.e_c_ghz.into(),
            self.kappa_mhz.into(),
            self.kerr_over_kappa.into(),
            self.kappa_estimate_mhz.into(),
        ]
    }
}

fn tuned(design: &BlochniumDesign) -> Result<(EffectiveModel, ModelReport), CliError> {
    let m = circuit::tuned_model(design)?;
    Ok((m, ModelReport::new(design, &m)))
}

/// Design with κ in MHz instead of rad/s.
fn design_json(d: &BlochniumDesign) -> serde_json::Value {
    let mut v = serde_json::to_value(d).expect("design serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("kappa");
        obj.insert("kappa_mhz".into(), to_mhz(d.kappa).into());
    }
    v
}

pub fn model(cfg: &RunConfig) -> Result<Report, CliError> {
    let (_, r) = tuned(&cfg.design)?;
    let mut t = Table::new(ModelReport::HEADER);
    t.push(r.cells());

    // ω_eff(φ) along the √cos φ law, from the unbiased frequency.
    let mut d0 = cfg.design;
    d0.flux_bias = 0.0;
    let f0 = to_ghz(circuit::effective_mode(&circuit::build_matrices(&d0)?)?);
    let pts = (0..=60)
        .map(|i| {
            let phi = 1.5 * i as f64 / 60.0;
            (phi, f0 * phi.cos().sqrt())
        })
        .collect();
    let panel = Panel::xy(
        "Mode frequency against flux bias",
        "flux bias φ (rad)",
        "ω_eff/2π (GHz)",
        vec![Series::line("√cos φ law", pts)],
    );
    #[derive(Serialize)]
    struct Out {
        design: serde_json::Value,
        model: ModelReport,
        zeta_threshold: f64,
    }
    Report::new(
        t,
        Out {
            design: design_json(&cfg.design),
            model: r,
            zeta_threshold: bifurcation_threshold(),
        },
        vec![panel],
    )
}

#[derive(Debug, Clone, Serialize)]
struct RootRow {
    n: f64,
    stable: bool,
    double: bool,
}

#[derive(Debug, Clone, Serialize)]
struct DrivePoint {
    delta: f64,
    zeta: f64,
    bistable: bool,
    roots: Vec<RootRow>,
}

pub fn photon_number(cfg: &RunConfig) -> Result<Report, CliError> {
    let c = block(&cfg.photon_number, "photon_number")?;
    let deltas = c.delta.values("photon_number.delta")?;
    let zetas: Vec<f64> = c
        .zeta
        .values("photon_number.zeta")?
        .into_iter()
        .map(|z| c.zeta_units.apply(z))
        .collect();
    let drives: Vec<PumpDrive> = zetas
        .iter()
        .flat_map(|&z| deltas.iter().map(move |&d| PumpDrive::new(d, z)))
        .collect();
    let points: Vec<DrivePoint> = drives
        .par_iter()
        .map(|drive| {
            let r = photon_number_roots(drive);
            DrivePoint {
                delta: drive.delta,
                zeta: drive.zeta,
                bistable: r.bistable,
                roots: r
                    .roots
                    .iter()
                    .map(|x| RootRow {
                        n: x.n,
                        stable: x.stable,
                        double: x.double,
                    })
                    .collect(),
            }
        })
        .collect();

    let mut t = Table::new(["delta", "zeta", "root_index", "n", "stable", "bistable"]);
    for p in &points {
        for (i, r) in p.roots.iter().enumerate() {
            t.push(vec![
                p.delta.into(),
                p.zeta.into(),
                i.into(),
                r.n.into(),
                r.stable.into(),
                p.bistable.into(),
            ]);
        }
    }

    let series = zetas
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let pts = points[k * deltas.len()..(k + 1) * deltas.len()]
                .iter()
                .flat_map(|p| p.roots.iter().map(move |r| (p.delta, r.n)))
                .collect();
            Series::markers(format!("ζ = {z:.4}"), pts)
        })
        .collect();
    let panel = Panel::xy(
        "Normalized photon number",
        "detuning δ",
        "photon number n",
        series,
    );
    #[derive(Serialize)]
    struct Out {
        zeta_units: crate::config::ZetaUnits,
        zeta_threshold: f64,
        points: Vec<DrivePoint>,
    }
    Report::new(
        t,
        Out {
            zeta_units: c.zeta_units,
            zeta_threshold: bifurcation_threshold(),
            points,
        },
        vec![panel],
    )
}

#[derive(Debug, Clone, Serialize)]
struct GainRow {
    delta: f64,
    zeta: f64,
    pump_phase: f64,
    root_index: usize,
    n: f64,
    stable: bool,
    bistable: bool,
    big_delta: f64,
    g_signal_db: Option<f64>,
    g_idler_db: Option<f64>,
    saturated: bool,
}

pub fn gain(cfg: &RunConfig) -> Result<Report, CliError> {
    let c = block(&cfg.gain, "gain")?;
    let deltas = c.delta.values("gain.delta")?;
    let zetas: Vec<f64> = c
        .zeta
        .values("gain.zeta")?
        .into_iter()
        .map(|z| c.zeta_units.apply(z))
        .collect();
    let big: Vec<f64> = c.big_delta.values("gain.big_delta")?;
    let drives: Vec<PumpDrive> = zetas
        .iter()
        .flat_map(|&z| deltas.iter().map(move |&d| PumpDrive::new(d, z).with_phase(c.pump_phase)))
        .collect();
    let probes: Vec<SignalProbe> = big.iter().map(|&b| SignalProbe::new(b)).collect();
    let map = gain_map(&drives, &probes, c.policy);
    let root_index: Vec<usize> = drives
        .par_iter()
        .zip(map.par_chunks(probes.len()))
        .map(|(d, cells)| {
            let n = cells[0].n;
            photon_number_roots(d).roots.iter().position(|r| r.n == n).unwrap_or(0)
        })
        .collect();

    let rows: Vec<GainRow> = map
        .iter()
        .enumerate()
        .map(|(i, p)| GainRow {
            delta: p.drive.delta,
            zeta: p.drive.zeta,
            pump_phase: p.drive.pump_phase,
            root_index: root_index[i / probes.len()],
            n: p.n,
            stable: p.stable,
            bistable: p.bistable,
            big_delta: p.big_delta,
            g_signal_db: p.gain.map(|g| g.g_signal_db),
            g_idler_db: p.gain.map(|g| g.g_idler_db),
            saturated: p.saturated,
        })
        .collect();

    let mut t = Table::new([
        "delta",
        "zeta",
        "root_index",
        "n",
        "stable",
        "bistable",
        "big_delta",
        "g_signal_db",
        "g_idler_db",
        "saturated",
    ]);
    for r in &rows {
        t.push(vec![
            r.delta.into(),
            r.zeta.into(),
            r.root_index.into(),
            r.n.into(),
            r.stable.into(),
            r.bistable.into(),
            r.big_delta.into(),
            Cell::opt(r.g_signal_db),
            Cell::opt(r.g_idler_db),
            r.saturated.into(),
        ]);
    }

    let saturated = rows.iter().filter(|r| r.saturated).count();
    let per_zeta = deltas.len() * big.len();
    let value = |r: &GainRow| r.g_signal_db.unwrap_or(f64::NAN);
    let mut panels = Vec::new();
    if deltas.len() > 1 && big.len() > 1 {
        for (k, &z) in zetas.iter().enumerate() {
            let chunk = &rows[k * per_zeta..(k + 1) * per_zeta];
            // Rows of the heat grid run along δ, columns along Δ.
            let values = chunk.chunks(big.len()).map(|row| row.iter().map(value).collect()).collect();
            panels.push(Panel::heat(
                format!("Signal gain at ζ = {z:.4}"),
                "signal detuning Δ",
                "pump detuning δ",
                Heat {
                    xs: big.clone(),
                    ys: deltas.clone(),
                    values,
                    label: "gain (dB)".into(),
                },
            ));
        }
    } else {
        let along_delta = big.len() == 1;
        let series = zetas
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                let chunk = &rows[k * per_zeta..(k + 1) * per_zeta];
                let pts = chunk
                    .iter()
                    .map(|r| (if along_delta { r.delta } else { r.big_delta }, value(r)))
                    .collect();
                Series::line(format!("ζ = {z:.4}"), pts)
            })
            .collect();
        panels.push(Panel::xy(
            "Signal gain",
            if along_delta { "pump detuning δ" } else { "signal detuning Δ" },
            "gain (dB)",
            series,
        ));
    }
    if saturated > 0 {
        for p in &mut panels {
            p.notes.push(format!("{saturated} saturated points"));
        }
    }
    #[derive(Serialize)]
    struct Out {
        zeta_units: crate::config::ZetaUnits,
        policy: bjpa_core::BranchPolicy,
        saturated_points: usize,
        points: Vec<GainRow>,
    }
    Report::new(
        t,
        Out {
            zeta_units: c.zeta_units,
            policy: c.policy,
            saturated_points: saturated,
            points: rows,
        },
        panels,
    )
}

#[derive(Debug, Clone, Serialize)]
struct P1dbPoint {
    pump_power_dbm: f64,
    zeta: f64,
    result: Option<P1dBResult>,
    error: Option<String>,
}

pub fn p1db(cfg: &RunConfig) -> Result<Report, CliError> {
    let c = block(&cfg.p1db, "p1db")?;
    let (m, report) = tuned(&cfg.design)?;
    let scale = PhysicalScale::for_model(cfg.scale.omega_p, &m)?;
    let zeta_at = |p: f64| metrics::zeta_from_watts(dbm_to_watts(p), &scale, m.kerr_k);
    let points: Vec<P1dbPoint> = match (&c.pump_power_dbm, c.gain_target_db) {
        (Some(grid), _) => grid
            .values("p1db.pump_power_dbm")?
            .par_iter()
            .map(|&p| {
                let r = metrics::compression_point_with(m.kerr_k, &scale, p, c.delta, &c.compression);
                P1dbPoint {
                    pump_power_dbm: p,
                    zeta: zeta_at(p),
                    error: r.as_ref().err().map(ToString::to_string),
                    result: r.ok(),
                }
            })
            .collect(),
        (None, Some(target)) => {
            let r = metrics::p1db_at_gain(&m, &scale, c.delta, target, &c.compression)?;
            vec![P1dbPoint {
                pump_power_dbm: r.pump_power_dbm,
                zeta: zeta_at(r.pump_power_dbm),
                result: Some(r),
                error: None,
            }]
        }
        (None, None) => unreachable!("checked during validation"),
    };

    let mut t = Table::new([
        "pump_power_dbm",
        "zeta",
        "small_signal_gain_db",
        "p1db_dbm",
        "gain_at_p1db_db",
        "open_ended",
        "error",
    ]);
    for p in &points {
        let r = p.result.as_ref();
        t.push(vec![
            p.pump_power_dbm.into(),
            p.zeta.into(),
            Cell::opt(r.map(|r| r.small_signal_gain_db)),
            Cell::opt(r.and_then(|r| r.p1db_dbm)),
            Cell::opt(r.and_then(|r| r.gain_at_p1db_db)),
            r.map_or(Cell::Empty, |r| r.is_open_ended().into()),
            p.error.as_deref().map_or(Cell::Empty, Cell::from),
        ]);
    }
    let line = |f: fn(&P1dBResult) -> Option<f64>| -> Vec<(f64, f64)> {
        points
            .iter()
            .map(|p| (p.pump_power_dbm, p.result.as_ref().and_then(f).unwrap_or(f64::NAN)))
            .collect()
    };
    let panels = vec![
        Panel::xy(
            "Input 1 dB compression point",
            "pump power (dBm)",
            "P1dB (dBm)",
            vec![Series::line("P1dB", line(|r| r.p1db_dbm))],
        ),
        Panel::xy(
            "Small-signal gain",
            "pump power (dBm)",
            "gain (dB)",
            vec![Series::line("gain", line(|r| Some(r.small_signal_gain_db)))],
        ),
    ];
    #[derive(Serialize)]
    struct Out {
        model: ModelReport,
        delta: f64,
        gain_target_db: Option<f64>,
        compression: CompressionOptions,
        points: Vec<P1dbPoint>,
    }
    Report::new(
        t,
        Out {
            model: report,
            delta: c.delta,
            gain_target_db: c.gain_target_db,
            compression: c.compression,
            points,
        },
        panels,
    )
}

pub fn tune(cfg: &RunConfig) -> Result<Report, CliError> {
    let c = block(&cfg.tune, "tune")?;
    let scale = PhysicalScale::new(cfg.scale.omega_p, cfg.design.kappa)?;
    let curve = metrics::band_coverage(&cfg.design, &scale, c.band_ghz, c.n_points, c.drive)?;
    let mut t = Table::new([
        "flux_bias",
        "cos_phi",
        "omega_eff_ghz",
        "sqrt_law_ghz",
        "gain_db",
        "bandwidth_ghz",
        "overlaps_next",
    ]);
    for p in &curve.points {
        t.push(vec![
            p.flux_bias.into(),
            p.flux_bias.cos().into(),
            p.omega_eff_ghz.into(),
            p.sqrt_law_ghz.into(),
            p.gain_db.into(),
            Cell::opt(p.bandwidth_ghz),
            p.overlaps_next.into(),
        ]);
    }
    let pick = |f: fn(&TuningPoint) -> f64| curve.points.iter().map(|p| (p.flux_bias, f(p))).collect();
    let mut panel = Panel::xy(
        format!("Flux tuning across {:.2} to {:.2} GHz", c.band_ghz.0, c.band_ghz.1),
        "flux bias φ (rad)",
        "ω_eff/2π (GHz)",
        vec![
            Series::markers("eigensolve", pick(|p| p.omega_eff_ghz)),
            Series::line("√cos φ law", pick(|p| p.sqrt_law_ghz)),
        ],
    );
    if !curve.covers_band {
        panel = panel.with_note("band not covered");
    }
    if curve.any_overlap() {
        panel = panel.with_note("neighboring windows overlap");
    }
    #[derive(Serialize)]
    struct Out {
        band_ghz: (f64, f64),
        covers_band: bool,
        any_overlap: bool,
        drive: PumpDrive,
        points: Vec<TuningPoint>,
    }
    Report::new(
        t,
        Out {
            band_ghz: curve.band_ghz,
            covers_band: curve.covers_band,
            any_overlap: curve.any_overlap(),
            drive: c.drive,
            points: curve.points,
        },
        vec![panel],
    )
}

#[derive(Debug, Clone, Serialize)]
struct OutcomeReport {
    design: serde_json::Value,
    model: ModelReport,
    result: Option<P1dBResult>,
    error: Option<String>,
}

pub fn compare(cfg: &RunConfig) -> Result<Report, CliError> {
    let c = block(&cfg.compare, "compare")?;
    let cmp = metrics::compare_designs(
        &cfg.design,
        &c.b,
        cfg.scale.omega_p,
        c.gain_target_db,
        c.delta,
        &c.compression,
    )?;
    let mut t = Table::new([
        "label",
        "junctions",
        "omega_eff_ghz",
        "kerr_hz",
        "kappa_mhz",
        "pump_power_dbm",
        "small_signal_gain_db",
        "p1db_dbm",
        "error",
    ]);
    let outcome = |label: &str, d: &BlochniumDesign, o: &metrics::DesignOutcome, t: &mut Table| {
        let m = ModelReport::new(d, &o.model);
        let r = o.result.as_ref();
        t.push(vec![
            label.into(),
            m.junctions.into(),
            m.omega_eff_ghz.into(),
            m.kerr_hz.into(),
            m.kappa_mhz.into(),
            Cell::opt(r.map(|r| r.pump_power_dbm)),
            Cell::opt(r.map(|r| r.small_signal_gain_db)),
            Cell::opt(o.p1db_dbm()),
            o.error.as_deref().map_or(Cell::Empty, Cell::from),
        ]);
        OutcomeReport {
            design: design_json(d),
            model: m,
            result: o.result,
            error: o.error.clone(),
        }
    };
    let a = outcome("a", &cfg.design, &cmp.a, &mut t);
    let b = outcome("b", &c.b, &cmp.b, &mut t);
    let mut diff = vec![Cell::from("difference")];
    diff.extend(std::iter::repeat(Cell::Empty).take(6));
    diff.push(Cell::opt(cmp.difference_db));
    diff.push(Cell::Empty);
    t.push(diff);

    let p = |o: &OutcomeReport| o.result.and_then(|r| r.p1db_dbm).unwrap_or(f64::NAN);
    let panel = Panel::xy(
        format!("P1dB at matched {:.1} dB gain", c.gain_target_db),
        "design",
        "P1dB (dBm)",
        vec![
            Series::markers(format!("a ({} JJ)", a.model.junctions), vec![(0.0, p(&a))]),
            Series::markers(format!("b ({} JJ)", b.model.junctions), vec![(1.0, p(&b))]),
        ],
    );
    #[derive(Serialize)]
    struct Out {
        gain_target_db: f64,
        delta: f64,
        compression: CompressionOptions,
        a: OutcomeReport,
        b: OutcomeReport,
        difference_db: Option<f64>,
    }
    Report::new(
        t,
        Out {
            gain_target_db: cmp.gain_target_db,
            delta: cmp.delta,
            compression: c.compression,
            a,
            b,
            difference_db: cmp.difference_db,
        },
        vec![panel],
    )
}

/// CSV cell for a parameter value; counts print as integers.
fn param_cell(p: Param, v: f64) -> Cell {
    if p.is_integer() {
        Cell::Int(v as i64)
    } else {
        Cell::Float(param_column(p, v).1)
    }
}

/// Output column name and value for a parameter, with angular frequencies
/// converted to ordinary ones.
pub fn param_column(p: Param, v: f64) -> (String, f64) {
    match p {
        Param::Kappa => ("kappa_mhz".into(), to_mhz(v)),
        Param::OmegaP => ("omega_p_ghz".into(), to_ghz(v)),
        _ => (p.name().into(), v),
    }
}

#[derive(Debug, Clone, Serialize)]
struct CandidateReport {
    values: Vec<(String, f64)>,
    gain_db: f64,
    p1db_dbm: Option<f64>,
    pump_power_dbm: Option<f64>,
    feasible: bool,
    junctions: u64,
    error: Option<String>,
}

impl CandidateReport {
    fn new(params: &[Param], c: &Candidate) -> Self {
        Self {
            values: params.iter().zip(&c.values).map(|(&p, &v)| param_column(p, v)).collect(),
            gain_db: c.gain_db,
            p1db_dbm: c.p1db_dbm,
            pump_power_dbm: c.pump_power_dbm,
            feasible: c.feasible,
            junctions: c.junctions,
            error: c.error.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct StepReport {
    evaluation: usize,
    phase: Phase,
    candidate: CandidateReport,
}

pub fn optimize(cfg: &RunConfig, seed: Option<u64>) -> Result<Report, CliError> {
    let c = block(&cfg.optimize, "optimize")?;
    let spec = cfg.optimize_spec(c, seed);
    let result = optimize::optimize_design(&spec)?;
    let params: Vec<Param> = spec.dims.iter().map(|d| d.param).collect();

    let mut header: Vec<String> = vec!["evaluation".into(), "phase".into()];
    header.extend(params.iter().map(|&p| param_column(p, 0.0).0));
    header.extend(
        ["gain_db", "p1db_dbm", "pump_power_dbm", "feasible", "junctions"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut t = Table::new(header);
    let phase_name = |p: Phase| match p {
        Phase::Seed => "seed",
        Phase::Neighbor => "neighbor",
        Phase::Golden => "golden",
    };
    for s in &result.trace {
        let mut row: Vec<Cell> = vec![s.evaluation.into(), phase_name(s.phase).into()];
        row.extend(
            params
                .iter()
                .zip(&s.candidate.values)
                .map(|(&p, &v)| param_cell(p, v)),
        );
        row.extend([
            s.candidate.gain_db.into(),
            Cell::opt(s.candidate.p1db_dbm),
            Cell::opt(s.candidate.pump_power_dbm),
            s.candidate.feasible.into(),
            s.candidate.junctions.into(),
        ]);
        t.push(row);
    }
    let panel = Panel::xy(
        "Optimizer incumbent",
        "evaluation",
        "P1dB (dBm)",
        vec![Series::line(
            "best so far",
            result
                .trace
                .iter()
                .map(|s| (s.evaluation as f64, s.candidate.p1db_dbm.unwrap_or(f64::NAN)))
                .collect(),
        )],
    );
    #[derive(Serialize)]
    struct Out {
        seed: u64,
        budget: usize,
        min_gain_db: f64,
        evaluations: usize,
        exhaustive: bool,
        best: CandidateReport,
        best_design: serde_json::Value,
        trace: Vec<StepReport>,
    }
    let best_design = design_json(&optimize::design_at(&spec, &result.best.values));
    Report::new(
        t,
        Out {
            seed: spec.seed,
            budget: spec.budget,
            min_gain_db: spec.min_gain_db,
            evaluations: result.evaluations,
            exhaustive: result.exhaustive,
            best: CandidateReport::new(&params, &result.best),
            best_design,
            trace: result
                .trace
                .iter()
                .map(|s| StepReport {
                    evaluation: s.evaluation,
                    phase: s.phase,
                    candidate: CandidateReport::new(&params, &s.candidate),
                })
                .collect(),
        },
        vec![panel],
    )
}

fn metric_number(v: &MetricValue) -> f64 {
    match v {
        MetricValue::Number(x) => *x,
        MetricValue::Flag(b) => f64::from(u8::from(*b)),
        MetricValue::Error(_) => f64::NAN,
    }
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    index: usize,
    inputs: Vec<(String, f64)>,
    outputs: Vec<(String, MetricValue)>,
}

pub fn sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    let c = block(&cfg.sweep, "sweep")?;
    let spec = cfg.sweep_spec(c)?;
    let records = sweep::run_sweep(&spec)?;

    let mut header = vec!["index".to_string()];
    header.extend(spec.axes.iter().map(|a| param_column(a.param, 0.0).0));
    header.extend(spec.outputs.iter().map(|m| m.name().to_string()));
    header.push("errors".into());
    let mut t = Table::new(header);
    for r in &records {
        let mut row: Vec<Cell> = vec![r.index.into()];
        row.extend(r.inputs.iter().map(|&(p, v)| param_cell(p, v)));
        let mut errors = Vec::new();
        for (m, v) in &r.outputs {
            row.push(match v {
                MetricValue::Number(x) => Cell::Float(*x),
                MetricValue::Flag(b) => Cell::Bool(*b),
                MetricValue::Error(e) => {
                    errors.push(format!("{m}: {e}"));
                    Cell::Empty
                }
            });
        }
        row.push(Cell::Text(errors.join("; ")));
        t.push(row);
    }

    let label = |k: usize| {
        let p = spec.axes[k].param;
        param_column(p, 0.0).0
    };
    let x_of = |k: usize, v: f64| param_column(spec.axes[k].param, v).1;
    let mut panels = Vec::new();
    for (j, &m) in spec.outputs.iter().enumerate() {
        let value = |r: &bjpa_core::SweepRecord| metric_number(&r.outputs[j].1);
        match spec.axes.len() {
            1 => panels.push(Panel::xy(
                m.name(),
                label(0),
                m.name(),
                vec![Series::line(m.name(), records.iter().map(|r| (x_of(0, r.inputs[0].1), value(r))).collect())],
            )),
            2 => {
                let cols = spec.axes[1].values.len();
                panels.push(Panel::heat(
                    m.name(),
                    label(1),
                    label(0),
                    Heat {
                        xs: spec.axes[1].values.iter().map(|&v| x_of(1, v)).collect(),
                        ys: spec.axes[0].values.iter().map(|&v| x_of(0, v)).collect(),
                        values: records.chunks(cols).map(|row| row.iter().map(value).collect()).collect(),
                        label: m.name().into(),
                    },
                ))
            }
            _ => panels.push(Panel::xy(
                m.name(),
                "grid index",
                m.name(),
                vec![Series::markers(m.name(), records.iter().map(|r| (r.index as f64, value(r))).collect())],
            )),
        }
    }
    let rows: Vec<SweepRow> = records
        .iter()
        .map(|r| SweepRow {
            index: r.index,
            inputs: r.inputs.iter().map(|&(p, v)| param_column(p, v)).collect(),
            outputs: r.outputs.iter().map(|(m, v)| (m.name().to_string(), v.clone())).collect(),
        })
        .collect();
    #[derive(Serialize)]
    struct Out {
        points: usize,
        axes: Vec<String>,
        outputs: Vec<String>,
        records: Vec<SweepRow>,
    }
    Report::new(
        t,
        Out {
            points: rows.len(),
            axes: (0..spec.axes.len()).map(label).collect(),
            outputs: spec.outputs.iter().map(|m| m.name().to_string()).collect(),
            records: rows,
        },
        panels,
    )
}
