use std::fs;
use std::io::Write;
use std::path::Path;

use kxt_core::balance::{
    check_balance2_exact, check_balance_exact, check_balance_naive, check_balance_sampled, WorkBudget,
};
use kxt_core::bounds::{advice_length_check, contrast, epsilon_lower_bound, hard_string_params};
use kxt_core::construct::{
    chernoff_feasibility, chernoff_feasibility_2src, estimate_balanced_fraction, find_balanced_table,
    precision_digits, Strategy,
};
use kxt_core::extract::{
    advice_extract, extract, good_seeds, heavy_set_mass, output_distribution, smooth_min_entropy, FlatSource,
};
use kxt_core::nwgen::{design_greedy, nw_expand, nw_table_search, Design, HardFunction};
use kxt_core::params::ParamSpec;
use kxt_core::ratio::{self, parse_exponent, parse_rational};
use kxt_core::soi::{soi_ledger, SoiExperiment, SoiInputs};
use kxt_core::table::{decode, AnyTable};
use kxt_core::{Error, Params, Table, Thresholds2};
use serde::Serialize;
use serde_json::{json, Value};

use crate::*;

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { code: if e.is_domain() { 1 } else { 2 }, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: 2, message: e.to_string() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError { code: 2, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError { code: 2, message: msg.into() }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Serialize)]
struct Header<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    jobs: Option<usize>,
    budget: u64,
    command: &'a Command,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    header: Header<'a>,
    result: T,
}

fn emit(cli: &Cli, result: impl Serialize) -> CliResult {
    let report = Report {
        header: Header {
            tool: "kxt",
            version: kxt_core::VERSION,
            seed: cli.seed,
            jobs: cli.jobs,
            budget: cli.budget,
            command: &cli.command,
        },
        result,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &cli.out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Emits the partial report, then fails with the domain exit code.
fn emit_failure(cli: &Cli, result: impl Serialize, message: String) -> CliResult {
    emit(cli, result)?;
    Err(CliError { code: 1, message })
}

fn read_table(path: &Path) -> CliResult<AnyTable> {
    Ok(decode(&fs::read(path)?)?)
}

fn read_one_source(path: &Path) -> CliResult<Table> {
    match read_table(path)? {
        AnyTable::One(t) => Ok(t),
        AnyTable::Two(_) => Err(usage(format!("{} holds a two-source table", path.display()))),
    }
}

fn exponent(name: &str, v: &Option<String>) -> CliResult<kxt_core::ratio::Exponent> {
    match v {
        Some(s) => Ok(parse_exponent(s)?),
        None => Err(usage(format!("--{name} is required here"))),
    }
}

fn params(a: &ParamArgs) -> CliResult<Params> {
    let th = &a.thresholds;
    Ok(ParamSpec {
        n: a.n,
        n1: a.n1,
        m: a.m,
        k: parse_exponent(&th.k)?,
        d: parse_exponent(&th.d)?,
        delta: parse_exponent(&th.delta)?,
    }
    .validate()?)
}

fn thresholds2(n: u32, kx: &str, ky: &str, d: &str) -> CliResult<Thresholds2> {
    Ok(Thresholds2::from_exponents(n, parse_exponent(kx)?, parse_exponent(ky)?, parse_exponent(d)?)?)
}

#[derive(Serialize)]
struct Thresholds2View {
    kx_rows: u64,
    ky_cols: u64,
    d_factor: String,
}

fn view2(th: &Thresholds2) -> Thresholds2View {
    Thresholds2View { kx_rows: th.kx_rows, ky_cols: th.ky_cols, d_factor: ratio::format_rational(&th.d) }
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn hard_function(kind: HardArg, arity: usize, seed: u64) -> HardFunction {
    match kind {
        HardArg::Random => HardFunction::random(arity, seed),
        HardArg::Parity => HardFunction::parity(arity),
    }
}

fn hard_view(f: &HardFunction) -> Value {
    json!({ "arity": f.arity, "rng_seed": f.rng_seed, "truth_table": bit_string(&f.truth_table) })
}

pub fn run(cli: &Cli) -> CliResult {
    let budget = WorkBudget(cli.budget);
    match &cli.command {
        Command::Verify(a) => verify(cli, a, budget),
        Command::Gen(a) => gen(cli, a, budget),
        Command::Feasible(a) => feasible(cli, a),
        Command::Fraction(a) => {
            let p = params(&a.params)?;
            let est = estimate_balanced_fraction(&p, a.trials, cli.seed, budget)?;
            let bound = chernoff_feasibility(&p, precision_digits());
            emit(cli, json!({
                "params": p.summary(),
                "estimate": est,
                "union_bound_fraction_lower_bound": bound.balanced_fraction_lower_bound,
            }))
        }
        Command::Extract(a) => {
            let t = read_one_source(&a.table)?;
            emit(cli, json!({ "x": a.x, "y": a.y, "color": extract(&t, a.x, a.y)? }))
        }
        Command::Advice(a) => {
            let t = read_one_source(&a.table)?;
            let good = good_seeds(&t, a.x, &a.colors)?.len();
            let (seed, color) = advice_extract(&t, a.x, &a.colors)?;
            emit(cli, json!({ "x": a.x, "seed": seed, "color": color, "good_seeds": good }))
        }
        Command::Dist(a) => {
            let t = read_one_source(&a.table)?;
            let s = FlatSource::new(a.rows.clone(), t.shape().rows())?;
            let dist = output_distribution(&t, &s)?;
            let heavy = match a.heavy {
                Some(size) => Some(ratio::format_rational(&heavy_set_mass(&dist, size)?)),
                None => None,
            };
            emit(cli, json!({
                "support": s.support(),
                "min_entropy_bits": s.min_entropy_bits(),
                "distribution": dist.view(),
                "heavy_mass": heavy,
            }))
        }
        Command::Smooth(a) => smooth(cli, a),
        Command::Soi(SoiCommand::Ledger(a)) => {
            let inp = match a.random {
                Some(c) => SoiInputs { c2x: a.c2x, c2y: a.c2y, c2yx: a.c2yx, ..SoiInputs::random_strings(a.n, c, 0, a.c0) },
                None => SoiInputs {
                    n: a.n,
                    tx: a.tx.ok_or_else(|| usage("--tx or --random is required"))?,
                    ty: a.ty.ok_or_else(|| usage("--ty or --random is required"))?,
                    tyx: a.tyx.ok_or_else(|| usage("--tyx or --random is required"))?,
                    c2x: a.c2x,
                    c2y: a.c2y,
                    c2yx: a.c2yx,
                    c0: a.c0,
                },
            };
            let ledger = soi_ledger(&inp)?;
            emit(cli, json!({ "inputs": inp, "ledger": ledger, "gap": 2 * a.n - ledger.chain_lower_bound }))
        }
        Command::Soi(SoiCommand::Experiment(a)) => {
            let th = thresholds2(a.n, &a.kx, &a.ky, &a.d)?;
            let mut exp = SoiExperiment::new(a.n, a.m, th.clone(), cli.seed);
            exp.factor = parse_rational(&a.factor)?;
            exp.column_samples = a.samples;
            exp.construction_budget = a.construction_budget;
            exp.verify = budget;
            let (report, table) = exp.run_with(|i| exp.candidate(i))?;
            if let Some(path) = &a.table {
                fs::write(path, table.to_bytes())?;
            }
            emit(cli, json!({ "thresholds": view2(&th), "report": report }))
        }
        Command::Bounds(BoundsCommand::Epsilon(a)) => {
            let n32 = u32::try_from(a.n).map_err(|_| usage("n too large for the string bound"))?;
            let m32 = u32::try_from(a.m).map_err(|_| usage("m too large for the string bound"))?;
            let string = hard_string_params(n32, a.h, m32)?;
            let result = match &a.ratio {
                Some(r) => json!({
                    "hard_string": string,
                    "contrast": contrast(a.n, a.m, a.h, a.sigma, a.slack, &parse_rational(r)?)?,
                }),
                None => json!({
                    "hard_string": string,
                    "epsilon": epsilon_lower_bound(a.n, a.m, a.h, a.sigma, a.slack)?,
                }),
            };
            emit(cli, result)
        }
        Command::Bounds(BoundsCommand::Advice(a)) => {
            let check = advice_length_check(a.n, a.m, a.h, &parse_rational(&a.ratio)?)?;
            emit(cli, json!({ "advice": check }))
        }
        Command::Nw(NwCommand::Design(a)) => {
            let d = design_greedy(a.t, a.l, a.a, a.seed_len_budget)?;
            emit(cli, &d)
        }
        Command::Nw(NwCommand::Expand(a)) => nw_expand_cmd(cli, a),
        Command::Nw(NwCommand::Search(a)) => nw_search(cli, a, budget),
    }
}

fn verify(cli: &Cli, a: &VerifyArgs, budget: WorkBudget) -> CliResult {
    match read_table(&a.table)? {
        AnyTable::One(t) => {
            let shape = t.shape();
            let p = ParamSpec {
                n: shape.n,
                n1: shape.n1,
                m: shape.m,
                k: exponent("k", &a.k)?,
                d: exponent("d", &a.d)?,
                delta: exponent("delta", &a.delta)?,
            }
            .validate()?;
            let report = match a.mode {
                Mode::Naive => serde_json::to_value(check_balance_naive(&t, &p, budget)?)?,
                Mode::Exact => serde_json::to_value(check_balance_exact(&t, &p, budget)?)?,
                Mode::Sampled => serde_json::to_value(check_balance_sampled(&t, &p, a.trials, cli.seed)?)?,
            };
            emit(cli, json!({ "kind": "one-source", "params": p.summary(), "report": report }))
        }
        AnyTable::Two(t) => {
            if !matches!(a.mode, Mode::Exact) {
                return Err(usage("two-source tables support --mode exact only"));
            }
            let d = a.d.as_deref().ok_or_else(|| usage("--d is required here"))?;
            let kx = a.kx.as_deref().ok_or_else(|| usage("--kx is required here"))?;
            let ky = a.ky.as_deref().ok_or_else(|| usage("--ky is required here"))?;
            let th = thresholds2(t.n(), kx, ky, d)?;
            let factor = parse_rational(&a.factor)?;
            let report = check_balance2_exact(&t, &th, &factor, budget)?;
            emit(cli, json!({
                "kind": "two-source",
                "thresholds": view2(&th),
                "factor": ratio::format_rational(&factor),
                "report": report,
            }))
        }
    }
}

fn gen(cli: &Cli, a: &GenArgs, budget: WorkBudget) -> CliResult {
    let p = params(&a.params)?;
    let strategy = match a.strategy {
        StrategyArg::RandomRetry => Strategy::RandomRetry,
        StrategyArg::Exhaustive => Strategy::Exhaustive,
    };
    match find_balanced_table(&p, strategy, a.max_candidates, cli.seed, budget) {
        Ok(found) => {
            fs::write(&a.table, found.table.to_bytes())?;
            let report = check_balance_exact(&found.table, &p, budget)?;
            emit(cli, json!({
                "found": true,
                "params": p.summary(),
                "attempts": found.attempts,
                "report": report,
            }))
        }
        Err(e @ Error::NotFound { attempts }) => emit_failure(
            cli,
            json!({ "found": false, "params": p.summary(), "attempts": attempts }),
            e.to_string(),
        ),
        Err(e) => Err(e.into()),
    }
}

fn feasible(cli: &Cli, a: &FeasibleArgs) -> CliResult {
    let digits = a.digits.unwrap_or_else(precision_digits);
    if a.two_source {
        let kx = a.kx.as_deref().ok_or_else(|| usage("--kx is required with --two-source"))?;
        let ky = a.ky.as_deref().ok_or_else(|| usage("--ky is required with --two-source"))?;
        let th = thresholds2(a.n, kx, ky, &a.d)?;
        let f = chernoff_feasibility_2src(a.n, a.m, &th, digits);
        return emit(cli, json!({ "kind": "two-source", "thresholds": view2(&th), "feasibility": f }));
    }
    let p = ParamSpec {
        n: a.n,
        n1: a.n1.ok_or_else(|| usage("--n1 is required"))?,
        m: a.m,
        k: exponent("k", &a.k)?,
        d: parse_exponent(&a.d)?,
        delta: exponent("delta", &a.delta)?,
    }
    .validate()?;
    let f = chernoff_feasibility(&p, digits);
    emit(cli, json!({ "kind": "one-source", "params": p.summary(), "feasibility": f }))
}

fn smooth(cli: &Cli, a: &SmoothArgs) -> CliResult {
    let t = read_one_source(&a.table)?;
    let s = FlatSource::new(a.rows.clone(), t.shape().rows())?;
    let dist = output_distribution(&t, &s)?;
    let eps = parse_rational(&a.eps)?;
    let c = parse_rational(&a.c)?;
    let h = smooth_min_entropy(&dist, &eps)?;
    let floor = match &a.delta {
        Some(delta) => {
            let delta = parse_exponent(delta)?;
            let delta = *delta.numer() as f64 / *delta.denom() as f64;
            let floor = t.shape().m as f64 - delta - ratio::to_f64(&c);
            Some(json!({ "floor": floor, "meets_floor": h.bits >= floor }))
        }
        None => None,
    };
    emit(cli, json!({
        "support": s.support(),
        "smooth": h,
        "c": ratio::format_rational(&c),
        "entropy_floor": floor,
    }))
}

fn read_design(path: &Path, seed_len: Option<usize>, a: Option<usize>) -> CliResult<Design> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let obj = v.get("result").unwrap_or(&v);
    let sets_value = if obj.is_array() { obj } else { obj.get("sets").ok_or_else(|| usage("design has no sets"))? };
    let sets: Vec<Vec<u32>> = serde_json::from_value(sets_value.clone())?;
    let field = |name: &str| obj.get(name).and_then(Value::as_u64).map(|v| v as usize);
    let set_size = sets.first().map_or(0, Vec::len);
    let seed_len = seed_len
        .or_else(|| field("seed_len"))
        .unwrap_or_else(|| sets.iter().flatten().max().map_or(0, |&p| p as usize + 1));
    let max_intersect = a.or_else(|| field("max_intersect")).unwrap_or(set_size);
    let d = Design { seed_len, set_size, max_intersect, sets };
    d.validate()?;
    Ok(d)
}

fn nw_expand_cmd(cli: &Cli, a: &ExpandArgs) -> CliResult {
    let d = read_design(&a.design, a.seed_len, a.a)?;
    if a.bits.chars().any(|c| c != '0' && c != '1') {
        return Err(usage("--bits must be a string of 0 and 1"));
    }
    let seed: Vec<bool> = a.bits.chars().map(|c| c == '1').collect();
    let f = hard_function(a.hard, d.set_size, cli.seed);
    let out = nw_expand(&f, &d, &seed)?;
    emit(cli, json!({ "seed_len": d.seed_len, "hard_function": hard_view(&f), "output": bit_string(&out) }))
}

fn nw_search(cli: &Cli, a: &SearchArgs, budget: WorkBudget) -> CliResult {
    let p = params(&a.params)?;
    let t = p.shape.cells() * p.shape.m as usize;
    let d = design_greedy(t, a.l, a.a, a.seed_len_budget)?;
    let f = hard_function(a.hard, a.l, cli.seed);
    let design = json!({ "seed_len": d.seed_len, "sets": d.sets.len(), "max_intersect": d.max_intersect });
    match nw_table_search(&p, &f, &d, a.seed_budget, budget)? {
        Ok(found) => {
            if let Some(path) = &a.table {
                fs::write(path, found.table.to_bytes())?;
            }
            let report = check_balance_exact(&found.table, &p, budget)?;
            emit(cli, json!({
                "found": true,
                "params": p.summary(),
                "design": design,
                "hard_function": hard_view(&f),
                "seed_index": found.seed_index,
                "seed": bit_string(&found.seed),
                "scanned": found.scanned,
                "report": report,
            }))
        }
        Err(nf) => emit_failure(
            cli,
            json!({
                "found": false,
                "params": p.summary(),
                "design": design,
                "hard_function": hard_view(&f),
                "scanned": nf.scanned,
                "best_load": nf.best_load_string(),
            }),
            format!("no balanced table among {} seeds", nf.scanned),
        ),
    }
}
