use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use super::io::{self, LoadTolerances, LoadedState};
use super::report::{format_f64, CliError, CliResult, Report};
use super::*;
use crate::bipartite::{
    consistency_check, entanglement_report, isotropic, pt_spectrum_closed, reduced_spectrum_dps, schmidt_dps,
    two_qubit_canonical, EntanglementReport, Verdict,
};
use crate::bloch::{dps_diagnose, invariant_ladder, to_coherence, DpsTolerances, SuBasis};
use crate::channels::{
    apply_depolarizing, jamiolkowski_fidelity, local_depolarize, pdps_recipe, protocol1, protocol1_formula,
    protocol1_literal_unitary, protocol1_with, twirl, twirled_polarization, x_flip_channel, ChiState, KrausChannel,
    TwirlMode,
};
use crate::matrix::{basis_vector, partial_trace, partial_transpose, CVector, DensityMatrix, Subsystem};
use crate::metrics::{
    equal_polarization_surface, fidelity_closed, fidelity_oracle, make_dps, p_min_physical, trace_distance_closed,
    trace_distance_oracle, DistanceReport, DpsState,
};
use crate::moments::{dps_p_from_moments_tol, moment_exact, moment_montecarlo, moment_permutation, MomentEstimate};
use crate::random::{haar_pure, seeded_rng, stream_seed};

pub(super) fn dispatch(cli: &Cli) -> CliResult<Output> {
    let load = LoadTolerances {
        hermitian: cli.hermitian_tol,
        trace: cli.trace_tol,
    };
    match &cli.command {
        Command::Analyze(a) => analyze(a, load),
        Command::Distance(a) => distance(a, load),
        Command::Entanglement(a) => entanglement(a, load),
        Command::Schmidt(a) => schmidt(a, load),
        Command::Isotropic(a) => isotropic_cmd(a),
        Command::Werner2q(a) => werner2q(a),
        Command::Channel(ChannelCommand::Depolarize(a)) => depolarize(a, load),
        Command::Channel(ChannelCommand::Protocol1(a)) => protocol1_cmd(a, load),
        Command::Channel(ChannelCommand::Twirl(a)) => twirl_cmd(a),
        Command::Channel(ChannelCommand::Recipe(a)) => recipe(a, load),
        Command::Channel(ChannelCommand::Local(a)) => local(a, load),
        Command::Moments(a) => moments(a, load),
        Command::Fig1(a) => fig1(a),
        Command::Gen(GenCommand::Dps(a)) => gen_dps(a),
        Command::Gen(GenCommand::Isotropic(a)) => gen_isotropic(a),
        Command::Gen(GenCommand::HaarPure(a)) => gen_haar(a),
    }
}

fn echo<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

fn new_report<T: Serialize>(command: &str, args: &T, load: Option<LoadTolerances>, inputs: &[&[u8]]) -> Report {
    let mut report = Report::new(command, echo(args), inputs);
    if let Some(load) = load {
        report.tolerance("hermitian", load.hermitian).tolerance("trace", load.trace);
    }
    report
}

fn finish(report: &Report, files: Vec<(std::path::PathBuf, Vec<u8>)>) -> CliResult<Output> {
    Ok(Output {
        stdout: report.to_bytes()?,
        files,
    })
}

fn dps_tolerances(t: DpsTolArgs) -> DpsTolerances {
    DpsTolerances {
        star: t.star_tol,
        spectrum: t.spectrum_tol,
    }
}

fn basis_for(dim: usize) -> CliResult<SuBasis> {
    SuBasis::new(dim).map_err(CliError::from)
}

fn bipartite_dims(flag: &Option<Vec<usize>>, loaded: &LoadedState) -> CliResult<(usize, usize)> {
    let (da, db) = match (flag, loaded.dims) {
        (Some(v), _) => (v[0], v[1]),
        (None, Some([da, db])) => (da, db),
        (None, None) => return Err(CliError::Input("subsystem dimensions missing: pass --dims DA DB".into())),
    };
    if da * db != loaded.state.dim() {
        return Err(CliError::Domain(format!(
            "dimensions {da} x {db} do not factor the state dimension {}",
            loaded.state.dim()
        )));
    }
    Ok((da, db))
}

/// DPS parameters of `rho`, with the purification taken from the extreme
/// eigenvector on the side of the sign of `p`.
fn as_dps(rho: &DensityMatrix, tol: DpsTolerances) -> CliResult<Option<DpsState>> {
    let diag = dps_diagnose(rho, &basis_for(rho.dim())?, tol)?;
    if !diag.is_dps {
        return Ok(None);
    }
    let spec = rho.spectrum();
    let psi = if diag.p > 0.0 {
        spec.vector(spec.max_index())
    } else if diag.p < 0.0 {
        spec.vector(0)
    } else {
        basis_vector(rho.dim(), 0)
    };
    Ok(Some(make_dps(psi, diag.p)?))
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn pure_source(source: &PureSource, seed: u64, load: LoadTolerances) -> CliResult<(CVector, Vec<u8>)> {
    match (&source.state, source.dim) {
        (Some(path), _) => {
            let loaded = io::load_state(path, load)?;
            let purity = loaded.state.purity();
            if (purity - 1.0).abs() > 1e-9 {
                return Err(CliError::Domain(format!("input state is not pure (purity {purity})")));
            }
            let spec = loaded.state.spectrum();
            Ok((spec.vector(spec.max_index()), loaded.bytes))
        }
        (None, Some(dim)) => {
            if dim < 2 {
                return Err(CliError::Domain(format!("dimension {dim} is below 2")));
            }
            Ok((haar_pure(dim, &mut seeded_rng(seed)), Vec::new()))
        }
        (None, None) => Err(CliError::Input("pass --state FILE or --dim D".into())),
    }
}

fn entanglement_value(r: &EntanglementReport) -> Value {
    json!({
        "pt_spectrum": r.pt_spectrum,
        "negativity": r.negativity,
        "negative_count": r.negative_count,
        "bound": r.bound,
        "entangled": r.entangled,
        "caveat": r.caveat,
    })
}

fn out_file(path: &Option<std::path::PathBuf>, bytes: CliResult<Vec<u8>>) -> CliResult<Vec<(std::path::PathBuf, Vec<u8>)>> {
    match path {
        Some(p) => Ok(vec![(p.clone(), bytes?)]),
        None => Ok(Vec::new()),
    }
}

fn analyze(a: &AnalyzeArgs, load: LoadTolerances) -> CliResult<Output> {
    let loaded = io::load_state(&a.state, load)?;
    let rho = &loaded.state;
    let mut report = new_report("analyze", a, Some(load), &[&loaded.bytes]);
    report.tolerance("star", a.tol.star_tol).tolerance("spectrum", a.tol.spectrum_tol);
    let basis = basis_for(rho.dim())?;
    let n = to_coherence(rho, &basis)?;
    let ladder = if rho.dim() == 2 {
        Value::Null
    } else {
        Value::from(invariant_ladder(&n, &basis, 3)?)
    };
    let diag = dps_diagnose(rho, &basis, dps_tolerances(a.tol))?;
    report
        .result("dim", rho.dim())
        .result("coherence_norm", diag.coherence_norm)
        .result("invariant_ladder", ladder)
        .result("verdict", if diag.is_dps { "DPS" } else { "NOT-DPS" })
        .result("p", if diag.is_dps { Value::from(diag.p) } else { Value::Null })
        .result("p_candidate", diag.p)
        .result("star_residual", diag.star_residual)
        .result("spectrum_deviation", diag.spectrum_deviation)
        .result("min_eigenvalue", diag.min_eigenvalue)
        .result("spectrum", rho.spectrum().values)
        .check("star_condition", diag.star_residual.is_none_or(|r| r < a.tol.star_tol))
        .check("spectrum_pattern", diag.spectrum_deviation < a.tol.spectrum_tol)
        .check("positive", diag.min_eigenvalue >= -a.tol.spectrum_tol);
    finish(&report, Vec::new())
}

fn distance(a: &DistanceArgs, load: LoadTolerances) -> CliResult<Output> {
    let sa = io::load_state(&a.state_a, load)?;
    let sb = io::load_state(&a.state_b, load)?;
    if sa.state.dim() != sb.state.dim() {
        return Err(CliError::Domain(format!(
            "states have dimensions {} and {}",
            sa.state.dim(),
            sb.state.dim()
        )));
    }
    let mut report = new_report("distance", a, Some(load), &[&sa.bytes, &sb.bytes]);
    report
        .tolerance("star", a.tol.star_tol)
        .tolerance("spectrum", a.tol.spectrum_tol)
        .tolerance("chain", a.chain_tol);

    let closed = if a.method == DistanceMethod::Oracle {
        None
    } else {
        let tol = dps_tolerances(a.tol);
        let (Some(x), Some(y)) = (as_dps(&sa.state, tol)?, as_dps(&sb.state, tol)?) else {
            return Err(CliError::Domain("closed-form distances need two DPS inputs".into()));
        };
        report
            .result("p", x.p())
            .result("q", y.p())
            .result("f", x.overlap(&y));
        Some((fidelity_closed(&x, &y)?, trace_distance_closed(&x, &y)?))
    };
    let oracle = if a.method == DistanceMethod::Closed {
        None
    } else {
        Some((
            fidelity_oracle(&sa.state, &sb.state)?,
            trace_distance_oracle(&sa.state, &sb.state)?,
        ))
    };
    let (fidelity, trace) = closed.or(oracle).expect("at least one method runs");
    let measures = DistanceReport::from_measures_tol(fidelity, trace, a.chain_tol)?;
    let (lower, upper) = measures.chain_bounds();
    report
        .result("fidelity", measures.fidelity)
        .result("trace_distance", measures.trace_distance)
        .result("bures", measures.bures)
        .result("angle", measures.angle)
        .result("chain", json!({"lower": lower, "upper": upper}));
    report.check("fuchs_chain", true);
    if let (Some(c), Some(o)) = (closed, oracle) {
        let df = (c.0 - o.0).abs();
        let dt = (c.1 - o.1).abs();
        report.tolerance("delta", a.delta_tol);
        report.result("delta", json!({"fidelity": df, "trace_distance": dt}));
        if df > a.delta_tol || dt > a.delta_tol {
            return Err(CliError::Internal(format!(
                "closed form and oracle disagree (fidelity {df:.3e}, trace distance {dt:.3e})"
            )));
        }
        report.check("closed_matches_oracle", true);
    }
    finish(&report, Vec::new())
}

fn entanglement(a: &EntanglementArgs, load: LoadTolerances) -> CliResult<Output> {
    let loaded = io::load_state(&a.state, load)?;
    let (da, db) = bipartite_dims(&a.dims, &loaded)?;
    let rho = &loaded.state;
    let mut report = new_report("entanglement", a, Some(load), &[&loaded.bytes]);
    report
        .tolerance("negative", a.neg_tol)
        .tolerance("star", a.tol.star_tol)
        .tolerance("spectrum", a.tol.spectrum_tol);
    let pt = partial_transpose(rho.matrix(), da, db, Subsystem::B)?;
    let brute = crate::matrix::eig_hermitian(&pt)?.values;
    let r = EntanglementReport::from_pt_spectrum_with_tol(brute.clone(), da.min(db), a.neg_tol);
    report.result("dims", vec![da, db]).result("ppt", entanglement_value(&r));
    report.check("count_within_bound", r.negative_count <= r.bound);

    let dps = match as_dps(rho, dps_tolerances(a.tol))? {
        Some(state) if state.p().abs() >= 1e-9 => {
            let (p, form) = schmidt_dps(rho, da, db, &basis_for(da * db)?)?;
            let closed = pt_spectrum_closed(p, &form.b, da, db)?;
            let delta = max_deviation(&closed, &brute);
            report.tolerance("delta", a.delta_tol);
            if delta > a.delta_tol {
                return Err(CliError::Internal(format!(
                    "closed PT spectrum deviates from the brute-force one by {delta:.3e}"
                )));
            }
            let d = (da * db) as f64;
            let mut thresholds = Vec::new();
            for j in 0..form.b.len() {
                for k in j + 1..form.b.len() {
                    let prod = form.b[j] * form.b[k];
                    if prod > 1e-12 {
                        thresholds.push(json!({"pair": [j, k], "threshold": 1.0 / (d * prod + 1.0)}));
                    }
                }
            }
            report.check("closed_matches_brute_force", true);
            json!({
                "p": p,
                "schmidt": form.b,
                "pt_spectrum_closed": closed,
                "delta": delta,
                "pair_thresholds": thresholds,
                "max_entangled_pair_threshold": 1.0 / (d / 2.0 + 1.0),
            })
        }
        _ => Value::Null,
    };
    report.result("dps", dps);
    finish(&report, Vec::new())
}

fn schmidt(a: &SchmidtArgs, load: LoadTolerances) -> CliResult<Output> {
    let loaded = io::load_state(&a.state, load)?;
    let (da, db) = bipartite_dims(&a.dims, &loaded)?;
    let rho = &loaded.state;
    let mut report = new_report("schmidt", a, Some(load), &[&loaded.bytes]);
    report
        .tolerance("star", a.tol.star_tol)
        .tolerance("spectrum", a.tol.spectrum_tol)
        .tolerance("delta", a.delta_tol);
    if as_dps(rho, dps_tolerances(a.tol))?.is_none() {
        return Err(CliError::Domain("state is not a DPS".into()));
    }
    let (p, form) = schmidt_dps(rho, da, db, &basis_for(da * db)?)?;
    let rank = form.rank(1e-9);
    let marginal_a = DensityMatrix::from_hermitian_part(partial_trace(rho.matrix(), da, db, Subsystem::A)?)?;
    let marginal_b = DensityMatrix::from_hermitian_part(partial_trace(rho.matrix(), da, db, Subsystem::B)?)?;
    let closed_a = reduced_spectrum_dps(p, &form.b, da, rank)?;
    let closed_b = reduced_spectrum_dps(p, &form.b, db, rank)?;
    let delta = max_deviation(&closed_a, &marginal_a.spectrum().values)
        .max(max_deviation(&closed_b, &marginal_b.spectrum().values));
    if delta > a.delta_tol {
        return Err(CliError::Internal(format!(
            "closed marginal spectra deviate from the eigensolved ones by {delta:.3e}"
        )));
    }
    let verdict = match consistency_check(&marginal_a, &marginal_b) {
        Verdict::Consistent { p, b_squared } => json!({"consistent": true, "p": p, "b_squared": b_squared}),
        Verdict::Rejected(reason) => json!({"consistent": false, "reason": reason}),
    };
    report
        .result("p", p)
        .result("schmidt", form.b.clone())
        .result("rank", rank)
        .result("u", io::matrix_value(&form.u))
        .result("v", io::matrix_value(&form.v))
        .result("reduced_spectrum_a", closed_a)
        .result("reduced_spectrum_b", closed_b)
        .result("marginal_delta", delta)
        .result("marginal_consistency", verdict)
        .check("marginals_match", true);
    finish(&report, Vec::new())
}

fn isotropic_cmd(a: &IsotropicArgs) -> CliResult<Output> {
    let (state, separable) = isotropic(a.da, a.f)?;
    let rho = state.to_density();
    let r = EntanglementReport::from_pt_spectrum_with_tol(
        entanglement_report(&rho, a.da, a.da)?.pt_spectrum,
        a.da,
        a.neg_tol,
    );
    let mut report = new_report("isotropic", a, None, &[]);
    report
        .tolerance("negative", a.neg_tol)
        .result("p", state.p())
        .result("threshold", 1.0 / (a.da as f64 + 1.0))
        .result("separable_by_fraction", separable)
        .result("ppt", entanglement_value(&r))
        .check("ppt_agrees_with_fraction", r.entangled != separable);
    let files = out_file(&a.out, io::state_bytes(&rho, Some([a.da, a.da])))?;
    finish(&report, files)
}

fn werner2q(a: &Werner2qArgs) -> CliResult<Output> {
    let (rho, mu) = two_qubit_canonical(a.p, a.omega)?;
    let r = EntanglementReport::from_pt_spectrum_with_tol(entanglement_report(&rho, 2, 2)?.pt_spectrum, 2, a.neg_tol);
    let mut sorted = mu.to_vec();
    sorted.sort_by(f64::total_cmp);
    let delta = max_deviation(&sorted, &r.pt_spectrum);
    if delta > 1e-10 {
        return Err(CliError::Internal(format!(
            "closed PT eigenvalues deviate from the brute-force ones by {delta:.3e}"
        )));
    }
    let predicted = a.p > 1.0 / 3.0 && a.omega.sin() > (1.0 - a.p) / (2.0 * a.p);
    let mut report = new_report("werner2q", a, None, &[]);
    report
        .tolerance("negative", a.neg_tol)
        .result("mu", mu.to_vec())
        .result("delta", delta)
        .result("mu4_negative_predicted", predicted)
        .result("ppt", entanglement_value(&r))
        .check("closed_matches_brute_force", true);
    let files = out_file(&a.out, io::state_bytes(&rho, Some([2, 2])))?;
    finish(&report, files)
}

fn depolarize(a: &DepolarizeArgs, load: LoadTolerances) -> CliResult<Output> {
    let loaded = io::load_state(&a.state, load)?;
    let d = loaded.state.dim();
    let p_min = p_min_physical(d);
    if a.require_cp && a.p < p_min - 1e-12 {
        return Err(CliError::Domain(format!(
            "p = {} is outside the completely positive range [{p_min}, 1]",
            a.p
        )));
    }
    let out = apply_depolarizing(&loaded.state, a.p)?;
    let mut report = new_report("channel depolarize", a, Some(load), &[&loaded.bytes]);
    report
        .result("p", a.p)
        .result("p_min_physical", p_min)
        .result("physically_realizable", out.physically_realizable)
        .result("spectrum", out.state.spectrum().values)
        .check("positive", out.state.is_positive(1e-12));
    let files = out_file(&a.out, io::state_bytes(&out.state, loaded.dims))?;
    finish(&report, files)
}

fn protocol1_cmd(a: &Protocol1Args, load: LoadTolerances) -> CliResult<Output> {
    let (psi, bytes) = pure_source(&a.source, a.seed, load)?;
    let d = psi.len();
    if a.beta2 < 0.0 {
        return Err(CliError::Domain(format!("beta2 = {} is negative", a.beta2)));
    }
    let beta = Complex64::from_polar(a.beta2.sqrt(), a.beta_phase);
    let chi = ChiState::from_beta(d, beta)?;
    let out = protocol1(&psi, &chi)?;
    let formula = protocol1_formula(&psi, a.beta2)?;
    let delta = trace_distance_oracle(&out, &formula)?;
    let literal = protocol1_with(&protocol1_literal_unitary(d)?, &psi, &chi)?;
    let literal_delta = trace_distance_oracle(&literal, &formula)?;
    let mut report = new_report("channel protocol1", a, Some(load), &[&bytes]);
    if a.source.state.is_none() {
        report = report.seed(a.seed);
        report.tolerance("hermitian", load.hermitian).tolerance("trace", load.trace);
    }
    report.tolerance("delta", a.tol);
    if delta > a.tol {
        return Err(CliError::Internal(format!(
            "protocol output deviates from the closed form by {delta:.3e}"
        )));
    }
    report
        .result("dim", d)
        .result("alpha", json!([chi.alpha().re, chi.alpha().im]))
        .result("beta", json!([chi.beta().re, chi.beta().im]))
        .result("p", 1.0 - a.beta2)
        .result("delta", delta)
        .result("literal_circuit_delta", literal_delta)
        .check("matches_formula", true);
    let files = out_file(&a.out, io::state_bytes(&out, None))?;
    finish(&report, files)
}

fn twirl_cmd(a: &TwirlArgs) -> CliResult<Output> {
    let (channel, bytes): (KrausChannel, Vec<u8>) = match &a.channel {
        Some(path) => {
            let bytes = io::read_bytes(path)?;
            (io::parse_channel(&bytes)?, bytes)
        }
        None => {
            let dim = a.dim.ok_or_else(|| CliError::Input("pass --channel FILE or --dim D".into()))?;
            (x_flip_channel(dim, a.f.unwrap_or(0.0))?, Vec::new())
        }
    };
    let mode = match a.mode {
        TwirlModeArg::ExactClifford => TwirlMode::ExactClifford,
        TwirlModeArg::ExactCliffordNonidentity => TwirlMode::ExactCliffordNonIdentity,
        TwirlModeArg::Haar => TwirlMode::HaarSample,
    };
    let result = twirl(&channel, mode, a.samples, a.seed)?;
    let f = jamiolkowski_fidelity(&channel);
    let mut report = new_report("channel twirl", a, None, &[&bytes]);
    if mode == TwirlMode::HaarSample {
        report = report.seed(a.seed);
    }
    report
        .result("dim", channel.dim())
        .result("f", f)
        .result("p_expected", twirled_polarization(channel.dim(), f))
        .result("p_hat", result.p_hat)
        .result("std_error", result.std_error)
        .result("group_size", result.group_size)
        .result("depolarizing_deviation", result.depolarizing_deviation);
    let files = out_file(&a.out, io::channel_bytes(&result.channel))?;
    finish(&report, files)
}

fn recipe(a: &RecipeArgs, load: LoadTolerances) -> CliResult<Output> {
    let (psi, bytes) = pure_source(&a.source, stream_seed(a.seed, 0), load)?;
    let out = pdps_recipe(&psi, a.f, a.seed, a.trials)?;
    let mut report = new_report("channel recipe", a, Some(load), &[&bytes]).seed(a.seed);
    report.tolerance("hermitian", load.hermitian).tolerance("trace", load.trace);
    let z = if out.std_error > 0.0 {
        Value::from((out.p_estimate - out.p_expected) / out.std_error)
    } else {
        Value::Null
    };
    report
        .result("dim", psi.len())
        .result("trials", out.trials)
        .result("p_estimate", out.p_estimate)
        .result("std_error", out.std_error)
        .result("p_expected", out.p_expected)
        .result("z_score", z);
    let files = out_file(&a.out, io::state_bytes(&out.state, None))?;
    finish(&report, files)
}

fn local(a: &LocalArgs, load: LoadTolerances) -> CliResult<Output> {
    let loaded = io::load_state(&a.state, load)?;
    let (da, db) = bipartite_dims(&a.dims, &loaded)?;
    let out = local_depolarize(&loaded.state, da, db, a.pa, a.pb)?;
    let diag = dps_diagnose(&out, &basis_for(da * db)?, dps_tolerances(a.tol))?;
    let mut report = new_report("channel local", a, Some(load), &[&loaded.bytes]);
    report
        .tolerance("star", a.tol.star_tol)
        .tolerance("spectrum", a.tol.spectrum_tol)
        .result("verdict", if diag.is_dps { "DPS" } else { "NOT-DPS" })
        .result("p", if diag.is_dps { Value::from(diag.p) } else { Value::Null })
        .result("star_residual", diag.star_residual)
        .result("spectrum_deviation", diag.spectrum_deviation)
        .result("spectrum", out.spectrum().values);
    let files = out_file(&a.out, io::state_bytes(&out, Some([da, db])))?;
    finish(&report, files)
}

fn moments(a: &MomentsArgs, load: LoadTolerances) -> CliResult<Output> {
    let loaded = io::load_state(&a.state, load)?;
    let rho = &loaded.state;
    if a.m.iter().any(|&m| m < 1) {
        return Err(CliError::Input("moment orders must be positive".into()));
    }
    let estimates = a
        .m
        .iter()
        .map(|&m| match a.mode {
            MomentMode::Exact => Ok(moment_exact(rho, m)),
            MomentMode::Perm => moment_permutation(rho, m),
            MomentMode::Mc => moment_montecarlo(rho, m, a.shots, stream_seed(a.seed, m as u64)),
        })
        .collect::<crate::Result<Vec<MomentEstimate>>>()?;
    let mut report = new_report("moments", a, Some(load), &[&loaded.bytes]);
    if a.mode == MomentMode::Mc {
        report = report.seed(a.seed);
        report.tolerance("hermitian", load.hermitian).tolerance("trace", load.trace);
    }
    let values: Vec<Value> = estimates
        .iter()
        .map(|e| json!({"m": e.m, "value": e.value, "shots": e.shots, "std_error": e.std_error}))
        .collect();
    report.result("dim", rho.dim()).result("moments", values);
    if a.assume_dps {
        let find = |m: usize| estimates.iter().find(|e| e.m == m);
        let (Some(t2), Some(t3)) = (find(2), find(3)) else {
            return Err(CliError::Input("--assume-dps needs --m 2 3".into()));
        };
        let tol = if a.mode == MomentMode::Mc {
            a.t3_tol.max(4.0 * (t2.std_error + t3.std_error))
        } else {
            a.t3_tol
        };
        report.tolerance("t3", tol);
        let fit = dps_p_from_moments_tol(t2.value, t3.value, rho.dim(), tol)?;
        report
            .result("p", fit.p)
            .result("sign_resolved", fit.sign_resolved)
            .result("t3_residual", fit.t3_residual);
    }
    finish(&report, Vec::new())
}

fn fig1(a: &Fig1Args) -> CliResult<Output> {
    if a.grid < 2 {
        return Err(CliError::Input(format!("grid = {} is below 2", a.grid)));
    }
    let points = equal_polarization_surface(a.dim, a.grid)?;
    let mut csv = String::from("p,f,bures,trace_distance,sqrt_one_minus_F\n");
    for pt in &points {
        let (lower, upper) = (pt.bures * pt.bures / 2.0, pt.sqrt_one_minus_fidelity);
        if pt.trace_distance < lower - a.chain_tol || pt.trace_distance > upper + a.chain_tol {
            return Err(CliError::Internal(format!(
                "Fuchs chain violated at p = {}, f = {}",
                pt.p, pt.f
            )));
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            format_f64(pt.p),
            format_f64(pt.f),
            format_f64(pt.bures),
            format_f64(pt.trace_distance),
            format_f64(pt.sqrt_one_minus_fidelity)
        );
    }
    let bytes = csv.into_bytes();
    match &a.out {
        Some(path) => {
            let mut report = new_report("fig1", a, None, &[]);
            report
                .tolerance("chain", a.chain_tol)
                .result("rows", points.len())
                .result("csv_digest", super::report::sha256_hex(&[&bytes]))
                .check("fuchs_chain", true);
            finish(&report, vec![(path.clone(), bytes)])
        }
        None => Ok(Output {
            stdout: bytes,
            files: Vec::new(),
        }),
    }
}

fn emit_state(
    command: &str,
    args: &impl Serialize,
    state: &DensityMatrix,
    dims: Option<[usize; 2]>,
    out: &Option<std::path::PathBuf>,
    seed: Option<u64>,
) -> CliResult<Output> {
    let bytes = io::state_bytes(state, dims)?;
    match out {
        Some(path) => {
            let mut report = new_report(command, args, None, &[]);
            if let Some(seed) = seed {
                report = report.seed(seed);
            }
            report
                .result("dim", state.dim())
                .result("state_digest", super::report::sha256_hex(&[&bytes]));
            finish(&report, vec![(path.clone(), bytes)])
        }
        None => Ok(Output {
            stdout: bytes,
            files: Vec::new(),
        }),
    }
}

fn checked_dims(dims: &Option<Vec<usize>>, dim: usize) -> CliResult<Option<[usize; 2]>> {
    match dims {
        Some(v) if v[0] * v[1] != dim => Err(CliError::Domain(format!(
            "dimensions {} x {} do not factor {dim}",
            v[0], v[1]
        ))),
        Some(v) => Ok(Some([v[0], v[1]])),
        None => Ok(None),
    }
}

fn gen_dps(a: &GenDpsArgs) -> CliResult<Output> {
    if a.dim < 2 {
        return Err(CliError::Domain(format!("dimension {} is below 2", a.dim)));
    }
    let dims = checked_dims(&a.dims, a.dim)?;
    let psi = haar_pure(a.dim, &mut seeded_rng(a.seed));
    let state = make_dps(psi, a.p)?.to_density();
    emit_state("gen dps", a, &state, dims, &a.out, Some(a.seed))
}

fn gen_isotropic(a: &GenIsotropicArgs) -> CliResult<Output> {
    let (state, _) = isotropic(a.da, a.f)?;
    emit_state("gen isotropic", a, &state.to_density(), Some([a.da, a.da]), &a.out, None)
}

fn gen_haar(a: &GenHaarArgs) -> CliResult<Output> {
    if a.dim < 2 {
        return Err(CliError::Domain(format!("dimension {} is below 2", a.dim)));
    }
    let dims = checked_dims(&a.dims, a.dim)?;
    let psi = haar_pure(a.dim, &mut seeded_rng(a.seed));
    let state = DensityMatrix::pure(&psi)?;
    emit_state("gen haar-pure", a, &state, dims, &a.out, Some(a.seed))
}
