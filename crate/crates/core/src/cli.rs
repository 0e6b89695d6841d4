//! Command-line front end.
//!
//! Reports go to `out` as JSON lines; a short human summary goes to `err`.
//! Exit status: 0 when the command succeeds and every checked property
//! holds, 1 when a property is violated, 2 on usage or input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::audit::{audit, gross_substitutes_check, ic_probe, GsVerdict};
use crate::error::Error;
use crate::flowcert::{build_d_minus2_with, thm41_chain, thm41_profiles};
use crate::fuzz::{case_rng, random_capacitated, random_price_pair, random_row, run_fuzz, CapacityMode, FuzzConfig};
use crate::instance::{load, Instance};
use crate::matching::social_optimum;
use crate::mechanisms::{vcg_outcome, Mechanism};
use crate::rational::Rat;
use crate::valuation::{SetFunction, Valuation};
use crate::walrasian::{compute_walrasian_prices, prop31_chain, prop31_instances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "capvcg", version, about = "Exact VCG and envy-freeness auditing for capacitated auctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Efficient allocation and welfare.
    Solve { file: PathBuf },
    /// VCG payments under a pivot rule.
    Payments {
        #[arg(long, default_value = "clarke")]
        mechanism: Mechanism,
        file: PathBuf,
    },
    /// Envy, IR, NPT and a seeded IC probe.
    Audit {
        #[arg(long, default_value = "clarke")]
        mechanism: Mechanism,
        /// Random misreports tried per agent.
        #[arg(long, default_value_t = 20)]
        deviations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        file: PathBuf,
    },
    /// Least Walrasian prices with a verified certificate.
    Walrasian { file: PathBuf },
    /// No-envy flow certificates for every pair with c_hi >= c_lo.
    Certify { file: PathBuf },
    /// Replay a built-in result.
    Repro {
        target: ReproTarget,
        #[arg(long)]
        eps: Option<Rat>,
        #[arg(long)]
        x: Option<Rat>,
        #[arg(long)]
        cap: Option<u32>,
        /// Candidate h_1 value for `prop31`.
        #[arg(long)]
        probe: Option<Rat>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: u64,
    },
    /// Seeded property campaign.
    Fuzz {
        #[arg(long, default_value_t = 4)]
        agents: usize,
        #[arg(long, default_value_t = 5)]
        goods: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Homo)]
        capacity_mode: ModeArg,
        #[arg(long, default_value = "clarke")]
        mechanism: Mechanism,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        /// Records are always emitted in case order; accepted for compatibility.
        #[arg(long)]
        ordered: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Homo,
    Hetero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReproTarget {
    Example1,
    #[value(alias = "fig2")]
    Prop31,
    Fig3,
    #[value(name = "thm41-general")]
    Thm41General,
    #[value(name = "thm3-cert")]
    Thm3Cert,
    #[value(name = "gs-check")]
    GsCheck,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn emit<T: Serialize>(&mut self, value: &T) {
        let line = serde_json::to_string(value).expect("reports serialize");
        let _ = writeln!(self.out, "{line}");
    }

    fn say(&mut self, msg: impl AsRef<str>) {
        let _ = writeln!(self.err, "{}", msg.as_ref());
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let mut io = Io { out, err };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(e) => {
            let code = match e {
                Error::Certificate(_) | Error::Walrasian(_) => EXIT_VIOLATION,
                _ => EXIT_USAGE,
            };
            io.emit(&json!({"error": e.to_string()}));
            io.say(format!("error: {e}"));
            code
        }
    }
}

fn read_instance(path: &PathBuf) -> Result<Instance, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    load(&bytes)
}

fn verdict(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

fn dispatch(command: Command, io: &mut Io<'_>) -> Result<i32, Error> {
    match command {
        Command::Solve { file } => {
            let inst = read_instance(&file)?;
            let opt = social_optimum(&inst)?;
            io.emit(&json!({"command": "solve", "allocation": opt.allocation, "welfare": opt.welfare}));
            io.say(format!("welfare {}", opt.welfare));
            Ok(EXIT_OK)
        }
        Command::Payments { mechanism, file } => {
            let inst = read_instance(&file)?;
            let out = vcg_outcome(&inst, mechanism.rule())?;
            let report = audit(&inst, &out)?;
            io.emit(&json!({
                "command": "payments",
                "mechanism": mechanism.id(),
                "allocation": out.allocation,
                "payments": out.payments,
                "pivot_values": out.pivot_values,
                "utilities": out.utilities(&inst.valuations()),
                "warnings": {
                    "envy_pairs": report.envy_pairs,
                    "ir_violations": report.ir_violations,
                    "npt_violations": report.npt_violations,
                },
            }));
            let payments: Vec<String> = out.payments.iter().map(ToString::to_string).collect();
            io.say(format!("{} payments [{}]", mechanism.id(), payments.join(", ")));
            for p in &report.envy_pairs {
                io.say(format!("warning: agent {} envies agent {} by {}", p.envier, p.envied, p.margin));
            }
            Ok(EXIT_OK)
        }
        Command::Audit { mechanism, deviations, seed, file } => {
            let inst = read_instance(&file)?;
            let out = vcg_outcome(&inst, mechanism.rule())?;
            let mut report = audit(&inst, &out)?;
            for agent in 0..inst.n_agents() {
                let mut rng = case_rng(seed, agent as u64);
                let rows: Vec<Vec<Rat>> = (0..deviations).map(|_| random_row(&mut rng, inst.n_goods())).collect();
                report.ic_witnesses.extend(ic_probe(&inst, mechanism.rule(), agent, &rows)?);
            }
            let clean = report.is_clean();
            io.emit(&json!({"command": "audit", "mechanism": mechanism.id(), "pass": clean, "report": report}));
            io.say(format!(
                "{}: {} envy pairs, {} IR, {} NPT, {} IC witnesses",
                mechanism.id(),
                report.envy_pairs.len(),
                report.ir_violations.len(),
                report.npt_violations.len(),
                report.ic_witnesses.len()
            ));
            Ok(verdict(clean))
        }
        Command::Walrasian { file } => {
            let inst = read_instance(&file)?;
            let cert = compute_walrasian_prices(&inst)?;
            let prices: Vec<String> = cert.prices.0.iter().map(ToString::to_string).collect();
            io.emit(&json!({"command": "walrasian", "pass": true, "certificate": cert}));
            io.say(format!("prices [{}]", prices.join(", ")));
            Ok(EXIT_OK)
        }
        Command::Certify { file } => {
            let inst = read_instance(&file)?;
            certify(&inst, io)
        }
        Command::Repro { target, eps, x, cap, probe, seed, count } => repro(target, eps, x, cap, probe, seed, count, io),
        Command::Fuzz { agents, goods, capacity_mode, mechanism, seed, count, ordered: _ } => {
            let config = FuzzConfig {
                max_agents: agents,
                max_goods: goods,
                mode: match capacity_mode {
                    ModeArg::Homo => CapacityMode::Homo,
                    ModeArg::Hetero => CapacityMode::Hetero,
                },
                mechanism,
                seed,
                count,
            };
            let records = run_fuzz(&config)?;
            let passed = records.iter().filter(|r| r.pass).count();
            for r in &records {
                io.emit(r);
            }
            io.emit(&json!({
                "command": "fuzz",
                "mechanism": mechanism.id(),
                "capacity_mode": config.mode,
                "seed": seed,
                "count": count,
                "passed": passed,
                "pass": passed as u64 == count,
            }));
            io.say(format!("{passed}/{count} pass"));
            Ok(verdict(passed as u64 == count))
        }
    }
}

fn certify(inst: &Instance, io: &mut Io<'_>) -> Result<i32, Error> {
    let opt = social_optimum(inst)?;
    let mut ok = true;
    let mut pairs = 0;
    for hi in 0..inst.n_agents() {
        for lo in 0..inst.n_agents() {
            if hi == lo || inst.capacities[hi] < inst.capacities[lo] {
                continue;
            }
            pairs += 1;
            match build_d_minus2_with(inst, hi, lo, &opt) {
                Ok(cert) => io.emit(&json!({"command": "certify", "hi": hi, "lo": lo, "pass": true, "certificate": cert})),
                Err(e) => {
                    ok = false;
                    io.emit(&json!({"command": "certify", "hi": hi, "lo": lo, "pass": false, "error": e.to_string()}));
                }
            }
        }
    }
    io.say(format!("{pairs} certificates, {}", if ok { "all hold" } else { "some fail" }));
    Ok(verdict(ok))
}

fn example1() -> Instance {
    let r = Rat::from_int;
    Instance::unit(vec![1, 2], vec![vec![r(2), r(2)], vec![r(1), r(2)]]).expect("valid")
}

#[allow(clippy::too_many_arguments)]
fn repro(
    target: ReproTarget,
    eps: Option<Rat>,
    x: Option<Rat>,
    cap: Option<u32>,
    probe: Option<Rat>,
    seed: u64,
    count: u64,
    io: &mut Io<'_>,
) -> Result<i32, Error> {
    match target {
        ReproTarget::Example1 => {
            let inst = example1();
            let mut ok = true;
            for mech in [Mechanism::Clarke, Mechanism::TopC, Mechanism::Sub2x2] {
                let out = vcg_outcome(&inst, mech.rule())?;
                let report = audit(&inst, &out)?;
                io.emit(&json!({
                    "command": "repro", "target": "example1", "mechanism": mech.id(),
                    "allocation": out.allocation, "payments": out.payments, "report": report,
                }));
                if mech == Mechanism::Clarke {
                    ok &= out.payments == [Rat::one(), Rat::zero()] && report.envy_pairs.len() == 1;
                } else {
                    ok &= report.is_clean();
                }
            }
            let cert = compute_walrasian_prices(&inst)?;
            io.emit(&json!({"command": "repro", "target": "example1", "walrasian": cert}));
            io.say(format!(
                "clarke charges (1, 0) and agent 0 envies agent 1; top-c and max-singleton rules are envy-free: {}",
                if ok { "reproduced" } else { "NOT reproduced" }
            ));
            Ok(verdict(ok))
        }
        ReproTarget::Prop31 => {
            let eps = eps.unwrap_or_else(|| Rat::new(1, 5));
            let chain = prop31_chain(&eps, probe.as_ref())?;
            let (v, _) = prop31_instances(&eps)?;
            let cert = compute_walrasian_prices(&v)?;
            io.emit(&json!({"command": "repro", "target": "prop31", "epsilon": eps, "chain": chain}));
            io.emit(&json!({"command": "repro", "target": "prop31", "walrasian": cert}));
            io.say(chain.to_string());
            Ok(verdict(chain.verdict))
        }
        ReproTarget::Fig3 | ReproTarget::Thm41General => {
            let general = target == ReproTarget::Thm41General;
            let c = cap.unwrap_or(if general { 3 } else { 1 });
            let x = x.unwrap_or_else(|| Rat::from_int(if general { 2 } else { 1 }));
            let eps = eps.unwrap_or_else(|| Rat::new(1, 10));
            let chain = thm41_chain(c, &x, &eps)?;
            let name = if general { "thm41-general" } else { "fig3" };
            io.emit(&json!({"command": "repro", "target": name, "c": c, "x": x, "epsilon": eps, "chain": chain}));
            let [_, pb, pc] = thm41_profiles(c, &x, &eps)?;
            let topc_c = vcg_outcome(&pc, Mechanism::TopC.rule())?;
            let topc_report = audit(&pc, &topc_c)?;
            let clarke_b = vcg_outcome(&pb, Mechanism::Clarke.rule())?;
            let clarke_report = audit(&pb, &clarke_b)?;
            io.emit(&json!({
                "command": "repro", "target": name, "profile": "c", "mechanism": "topc",
                "payments": topc_c.payments, "npt_violations": topc_report.npt_violations,
            }));
            io.emit(&json!({
                "command": "repro", "target": name, "profile": "b", "mechanism": "clarke",
                "payments": clarke_b.payments, "envy_pairs": clarke_report.envy_pairs,
            }));
            io.say(chain.to_string());
            Ok(verdict(chain.verdict))
        }
        ReproTarget::Thm3Cert => {
            let r = Rat::from_int;
            let inst = Instance::unit(
                vec![2, 1, 1],
                vec![
                    vec![r(4), r(3), Rat::new(5, 2)],
                    vec![r(5), r(1), r(2)],
                    vec![r(1), r(4), r(3)],
                ],
            )?;
            certify(&inst, io)
        }
        ReproTarget::GsCheck => {
            let mut failures = 0u64;
            for i in 0..count {
                let mut rng = case_rng(seed, i);
                let v = random_capacitated(&mut rng, 6);
                let pairs: Vec<_> = (0..5).map(|_| random_price_pair(&mut rng, v.num_goods())).collect();
                if let GsVerdict::Counterexample(c) = gross_substitutes_check(&v, &pairs)? {
                    failures += 1;
                    io.emit(&json!({"command": "repro", "target": "gs-check", "index": i, "counterexample": c}));
                }
            }
            let zero = Rat::zero();
            let complements = SetFunction::new(2, vec![zero.clone(), zero.clone(), zero, Rat::one()])?;
            let pairs = vec![(vec![Rat::new(1, 4), Rat::new(1, 4)], vec![Rat::new(1, 4), Rat::from_int(2)])];
            let fixture = gross_substitutes_check(&complements, &pairs)?;
            let detects = matches!(fixture, GsVerdict::Counterexample(_));
            io.emit(&json!({
                "command": "repro", "target": "gs-check", "count": count,
                "capacitated_failures": failures, "complements_fixture": fixture,
            }));
            io.say(format!(
                "{}/{count} capacitated valuations pass; complements fixture {}",
                count - failures,
                if detects { "rejected" } else { "NOT rejected" }
            ));
            Ok(verdict(failures == 0 && detects))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/example1.json");

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("capvcg").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn first_line(out: &str) -> serde_json::Value {
        serde_json::from_str(out.lines().next().unwrap()).unwrap()
    }

    #[test]
    fn solve_fixture() {
        let (code, out, _) = call(&["solve", FIXTURE]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(first_line(&out)["welfare"], 4);
    }

    #[test]
    fn payments_warn_on_envy() {
        let (code, out, err) = call(&["payments", "--mechanism", "clarke", FIXTURE]);
        assert_eq!(code, EXIT_OK);
        let v = first_line(&out);
        assert_eq!(v["payments"], json!([1, 0]));
        assert_eq!(v["warnings"]["envy_pairs"][0]["envier"], 0);
        assert!(err.contains("warning: agent 0 envies agent 1"));
    }

    #[test]
    fn audit_exit_reflects_envy() {
        assert_eq!(call(&["audit", FIXTURE]).0, EXIT_VIOLATION);
        assert_eq!(call(&["audit", "--mechanism", "topc", FIXTURE]).0, EXIT_OK);
    }

    #[test]
    fn walrasian_fixture() {
        let (code, out, _) = call(&["walrasian", FIXTURE]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(first_line(&out)["certificate"]["prices"], json!([1, 1]));
    }

    #[test]
    fn repro_targets_succeed() {
        for args in [
            &["repro", "example1"][..],
            &["repro", "prop31", "--eps", "1/5"],
            &["repro", "fig3"],
            &["repro", "thm41-general", "--cap", "2"],
            &["repro", "thm3-cert"],
            &["repro", "gs-check", "--count", "20"],
        ] {
            let (code, _, err) = call(args);
            assert_eq!(code, EXIT_OK, "{args:?}: {err}");
        }
    }

    #[test]
    fn probe_names_broken_requirement() {
        let (code, _, err) = call(&["repro", "prop31", "--eps", "1/5", "--probe", "0"]);
        assert_eq!(code, EXIT_OK);
        assert!(err.contains("probe breaks Walrasian prices at v"), "{err}");
        let (_, _, err) = call(&["repro", "prop31", "--eps", "1/5", "--probe", "10"]);
        assert!(err.contains("probe breaks individual rationality"), "{err}");
    }

    #[test]
    fn fuzz_summary_and_determinism() {
        let args = ["fuzz", "--agents", "4", "--goods", "5", "--capacity-mode", "homo", "--seed", "0", "--count", "500"];
        let (code, out, err) = call(&args);
        assert_eq!(code, EXIT_OK);
        assert!(err.contains("500/500 pass"));
        let summary: serde_json::Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
        assert_eq!(summary["passed"], 500);
        assert_eq!(call(&args).1, out);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["payments", "--mechanism", "nope", FIXTURE]).0, EXIT_USAGE);
        assert_eq!(call(&["solve", "/nonexistent.json"]).0, EXIT_USAGE);
        assert_eq!(call(&["repro", "prop31", "--eps", "0"]).0, EXIT_USAGE);
        assert_eq!(call(&[]).0, EXIT_USAGE);
    }
}
