//! Subcommand implementations: resolve the configuration, call the library,
//! write one artifact.  Each returns `Ok(false)` when a check reported in the
//! artifact failed (non-zero exit), `Ok(true)` otherwise.

use std::f64::consts::PI;
use std::io::Write;

use anyhow::{Context, Result};
use isosceles::certify::{self, CertifyOptions};
use isosceles::hill::{self, Branch};
use isosceles::mcgehee::{self, Budget, TwistOptions};
use isosceles::section::{self, DiskPoint, OrbitRecord, SearchOptions};
use isosceles::{volume, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{usage, Resolver};
use crate::output::{self, Meta};
use crate::{BranchArg, CertifyArgs, Cli, Command, CurveArgs, LedgerArg, McGeheeArgs, OrbitsArgs, TwistArgs};

const DEFAULT_SEED: u64 = 0x1505;

/// Runs one invocation.
pub fn run(cli: Cli) -> Result<bool> {
    let name = match &cli.command {
        Command::Rotation => "rotation",
        Command::Volume(_) => "volume",
        Command::Curve(_) => "curve",
        Command::Orbits(_) => "orbits",
        Command::Winding(_) => "winding",
        Command::TwistInterval(_) => "twist-interval",
        Command::Mcgehee(_) => "mcgehee",
        Command::Certify(_) => "certify",
    };
    let mut cfg = Resolver::load(cli.common.config.as_deref(), name)?;
    if let Some(jobs) = cfg.opt("jobs", cli.common.jobs)? {
        if jobs == 0 {
            return usage("--jobs must be positive");
        }
        // Only the first global pool wins; later calls in the same process are harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let out = cfg.opt("out", cli.common.out.clone())?;
    let mut ctx = Ctx { cfg, common: cli.common, name };
    let (ok, write): Emit = match cli.command {
        Command::Rotation => rotation(&mut ctx)?,
        Command::Volume(a) => volume_cmd(&mut ctx, a)?,
        Command::Curve(a) => curve(&mut ctx, a)?,
        Command::Orbits(a) => orbits(&mut ctx, a)?,
        Command::Winding(a) => winding(&mut ctx, a)?,
        Command::TwistInterval(a) => twist_interval(&mut ctx, a)?,
        Command::Mcgehee(a) => mcgehee_cmd(&mut ctx, a)?,
        Command::Certify(a) => certify_cmd(&mut ctx, a)?,
    };
    let meta = Meta::new(ctx.name, ctx.cfg.resolved());
    let mut w = output::open(out.as_deref())?;
    write(&mut *w, &meta)?;
    w.flush()?;
    Ok(ok)
}

type Emit = (bool, Box<dyn FnOnce(&mut dyn Write, &Meta) -> Result<()>>);

struct Ctx {
    cfg: Resolver,
    common: crate::Common,
    name: &'static str,
}

impl Ctx {
    fn params(&mut self, default: Option<(f64, f64)>) -> Result<Params> {
        let (beta, ecc) = match default {
            Some((b, e)) => (self.cfg.get("beta", self.common.beta, b)?, self.cfg.get("ecc", self.common.ecc, e)?),
            None => (self.cfg.require("beta", self.common.beta)?, self.cfg.require("ecc", self.common.ecc)?),
        };
        Params::from_beta_ecc(beta, ecc).with_context(|| format!("invalid parameters beta = {beta}, ecc = {ecc}"))
    }

    fn tol(&mut self, default: f64) -> Result<f64> {
        let t = self.cfg.get("tol", self.common.tol, default)?;
        if !(t > 0.0) {
            return usage("--tol must be positive");
        }
        Ok(t)
    }

    fn grid(&mut self, default: usize) -> Result<usize> {
        let n = self.cfg.get("grid", self.common.grid, default)?;
        if n == 0 {
            return usage("--grid must be at least 1");
        }
        Ok(n)
    }

    fn seed(&mut self) -> Result<u64> {
        self.cfg.get("seed", self.common.seed, DEFAULT_SEED)
    }
}

fn json_emit<T: serde::Serialize + 'static>(ok: bool, value: T) -> Result<Emit> {
    Ok((ok, Box::new(move |w, meta| output::write_json(w, meta, &value))))
}

/// Equally spaced points of `[0, hi]` (just `[hi]` for `n = 1`).
fn linspace(hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
}

fn rotation(ctx: &mut Ctx) -> Result<Emit> {
    let beta: f64 = ctx.cfg.require("beta", ctx.common.beta)?;
    let grid = ctx.cfg.opt("grid", ctx.common.grid)?;
    let rows: Vec<(f64, f64)>;
    let mut ok = true;
    match grid {
        None => {
            let ecc = ctx.cfg.require("ecc", ctx.common.ecc)?;
            rows = vec![(ecc, hill::rho_at(beta, ecc)? + 1.0)];
        }
        Some(0) => return usage("--grid must be at least 1"),
        Some(n) => {
            let ecc_max = ctx.cfg.get("ecc", ctx.common.ecc, 0.9)?;
            let report = hill::check_monotonicity(beta, &linspace(ecc_max, n))?;
            if !report.monotone {
                eprintln!("rotation number decreases by {:.3e} along the grid", report.worst_decrease);
                ok = false;
            }
            rows = report.samples;
        }
    }
    Ok((
        ok,
        Box::new(move |w, meta| {
            output::write_csv_header(w, meta)?;
            writeln!(w, "beta,ecc,rho")?;
            for (e, r) in rows {
                writeln!(w, "{beta},{e},{r:.12}")?;
            }
            Ok(())
        }),
    ))
}

fn volume_cmd(ctx: &mut Ctx, a: crate::VolumeArgs) -> Result<Emit> {
    let p = ctx.params(None)?;
    let tol = ctx.tol(volume::DEFAULT_TOL)?;
    let weyl_k_max = ctx.cfg.get("weyl_k", a.weyl_k, 10)?;
    let report = volume::inequality_report_with(&p, &volume::ReportOptions { tol, weyl_k_max, ..Default::default() })?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let ok = report.volume_vs_comparison.holds && report.comparison_vs_rotation.holds && report.systolic_bound.holds;
    json_emit(ok, report)
}

fn curve(ctx: &mut Ctx, a: CurveArgs) -> Result<Emit> {
    let j = ctx.cfg.require("j", a.j)?;
    let nu = ctx.cfg.require("nu", a.nu)?;
    let branch = ctx.cfg.opt("branch", a.branch)?.map(|b| match b {
        BranchArg::Minus => Branch::Minus,
        BranchArg::Plus => Branch::Plus,
    });
    let ecc_max = ctx.cfg.get("ecc_max", a.ecc_max, 0.9)?;
    if !(0.0..=hill::ECC_MAX).contains(&ecc_max) {
        return usage(format!("--ecc-max must lie in [0, {}]", hill::ECC_MAX));
    }
    let n = ctx.grid(19)?;
    let tol = ctx.tol(1e-12)?;
    let c = hill::trace_degenerate_curve(j, nu, branch, &linspace(ecc_max, n), tol)?;
    Ok((
        true,
        Box::new(move |w, meta| {
            output::write_csv_header(w, meta)?;
            c.write_csv(w)?;
            Ok(())
        }),
    ))
}

/// Periodic orbits of periods `1..=period`, deduplicated across periods.
fn collect_orbits(ctx: &mut Ctx, a: &OrbitsArgs, p: &Params) -> Result<Vec<OrbitRecord>> {
    let period = ctx.cfg.get("period", a.period, 3)?;
    if period == 0 {
        return usage("--period must be at least 1");
    }
    let tol = ctx.tol(section::DEFAULT_TOL)?;
    let line_samples = ctx.cfg.get("line_samples", a.line_samples, SearchOptions::default().line_samples)?;
    // `--grid N` adds an N x 2N Newton seed grid to the symmetric search.
    let n = ctx.cfg.get("grid", ctx.common.grid, 0)?;
    let n_random = ctx.cfg.get("random_seeds", a.random_seeds, 0)?;
    let seed = ctx.seed()?;
    let mut seeds = if n > 0 { section::seed_grid(p, n, 2 * n) } else { Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    seeds.extend((0..n_random).map(|_| {
        let frac = rng.gen::<f64>().sqrt() * 0.98;
        DiskPoint::from_polar(p, frac, 2.0 * PI * rng.gen::<f64>())
    }));
    let opts = SearchOptions { tol, line_samples, grid: (n, 2 * n), ..SearchOptions::default() };
    let mut all: Vec<OrbitRecord> = Vec::new();
    for k in 1..=period {
        for o in section::find_periodic_points(p, k, &seeds, &opts)? {
            if !all.iter().any(|q| section::hausdorff(q, &o) < opts.dedup_dist) {
                all.push(o);
            }
        }
    }
    Ok(all)
}

fn orbits(ctx: &mut Ctx, a: OrbitsArgs) -> Result<Emit> {
    let p = ctx.params(None)?;
    let all = collect_orbits(ctx, &a, &p)?;
    Ok((
        true,
        Box::new(move |w, meta| {
            output::write_jsonl_header(w, meta)?;
            for o in &all {
                writeln!(w, "{}", serde_json::to_string(o)?)?;
            }
            Ok(())
        }),
    ))
}

fn winding(ctx: &mut Ctx, a: OrbitsArgs) -> Result<Emit> {
    let p = ctx.params(None)?;
    let all = collect_orbits(ctx, &a, &p)?;
    let tol = ctx.tol(section::DEFAULT_TOL)?;
    let mut rows = Vec::new();
    let mut ok = true;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            match section::linking_number(&p, &all[i], &all[j], tol) {
                Ok(l) => rows.push((i, j, all[i].k, all[j].k, Some(l))),
                Err(e) => {
                    eprintln!("pair ({i}, {j}): {e}");
                    ok = false;
                    rows.push((i, j, all[i].k, all[j].k, None));
                }
            }
        }
    }
    Ok((
        ok,
        Box::new(move |w, meta| {
            output::write_csv_header(w, meta)?;
            writeln!(w, "i,j,k_i,k_j,lk,sum,residual,w_inf")?;
            for (i, j, ki, kj, l) in rows {
                match l {
                    Some(l) => writeln!(w, "{i},{j},{ki},{kj},{},{:.10},{:.3e},{:.10}", l.lk, l.sum, l.residual, l.lk as f64 / (ki * kj) as f64)?,
                    None => writeln!(w, "{i},{j},{ki},{kj},,,,")?,
                }
            }
            Ok(())
        }),
    ))
}

/// Smallest-denominator rational strictly inside `(lo, hi)`.
fn pick_target(lo: f64, hi: f64, max_den: i64) -> Option<(i64, i64)> {
    (1..=max_den).find_map(|q| {
        let n = (lo * q as f64).floor() as i64 + 1;
        let x = n as f64 / q as f64;
        (x > lo && x < hi).then_some((n, q))
    })
}

fn twist_interval(ctx: &mut Ctx, a: TwistArgs) -> Result<Emit> {
    let p = ctx.params(None)?;
    let tol = ctx.tol(section::DEFAULT_TOL)?;
    let report = volume::inequality_report(&p)?;
    let [lo, hi] = report.twist_interval;
    let max_den = ctx.cfg.get("max_den", a.max_den, 7)?;
    let (num, den) = match (ctx.cfg.opt("num", a.num)?, ctx.cfg.opt("den", a.den)?) {
        (Some(n), Some(d)) => (n, d),
        (None, None) => match pick_target(lo, hi, max_den) {
            Some(t) => t,
            None => return usage(format!("no rational with denominator <= {max_den} inside ({lo}, {hi})")),
        },
        _ => return usage("--num and --den go together"),
    };
    let line_samples = ctx.cfg.get("line_samples", a.line_samples, SearchOptions::default().line_samples)?;
    let opts = SearchOptions { tol, line_samples, grid: (0, 0), ..SearchOptions::default() };
    let target_tol = 1e-3;
    let tw = section::twist_realization(&p, num, den, report.twist_interval, target_tol, &opts)?;
    if !tw.success {
        eprintln!(
            "warning: {num}/{den} not realised within {target_tol:e}; nearest achieved winding {:?}",
            tw.achieved
        );
    }
    let pair = tw.pair.as_ref().map(|(o1, i, o2, j)| json!({ "k1": o1.k, "point1": o1.points[*i], "k2": o2.k, "point2": o2.points[*j] }));
    let out = json!({
        "interval": report.twist_interval,
        "rho_e": report.rho_e,
        "vol": report.vol_m.value,
        "T_e": report.t_e,
        "target": [num, den],
        "target_value": num as f64 / den as f64,
        "achieved": tw.achieved,
        "error": tw.achieved.map(|w| (w - num as f64 / den as f64).abs()),
        "success": tw.success,
        "pair": pair,
        "windings": tw.windings,
    });
    // A miss is reported, not fatal: existence does not imply findability by a finite search.
    json_emit(true, out)
}

fn mcgehee_cmd(ctx: &mut Ctx, a: McGeheeArgs) -> Result<Emit> {
    let p = ctx.params(Some((0.9, 0.9)))?;
    let twist = ctx.cfg.flag("twist", a.twist)?;
    let catalog = ctx.cfg.flag("catalog", a.catalog)?;
    let theta0 = ctx.cfg.get("theta0", a.theta0, 0.0)?;
    if twist && catalog {
        return usage("--twist and --catalog are exclusive");
    }
    if catalog {
        let d = Budget::default();
        let budget = Budget {
            samples: ctx.cfg.get("samples", a.samples, d.samples)?,
            z_cap: ctx.cfg.get("z_cap", a.z_cap, d.z_cap)?,
            tol: ctx.tol(d.tol)?,
            ..d
        };
        let cat = mcgehee::detect_parabolic_and_brake(&p, &budget)?;
        return Ok((
            true,
            Box::new(move |w, meta| {
                output::write_jsonl_header(w, meta)?;
                cat.write_jsonl(&mut *w)?;
                Ok(())
            }),
        ));
    }
    let delta = mcgehee::manifold_delta(&p)?;
    let x0 = ctx.cfg.get("x0", a.x0, delta)?;
    if twist {
        let halvings = ctx.cfg.get("halvings", a.halvings, 5)?;
        let tol = ctx.tol(TwistOptions::default().tol)?;
        let grid = mcgehee::gap_grid(&p, x0, theta0, halvings, tol)?;
        let prof = mcgehee::twist_profile(&p, x0, theta0, &grid, &TwistOptions { tol, ..TwistOptions::default() })?;
        return Ok((
            true,
            Box::new(move |w, meta| {
                output::write_csv_header(w, meta)?;
                writeln!(w, "rho0,T,Theta,resolved")?;
                for s in prof {
                    writeln!(w, "{},{},{},{}", s.rho0, s.t, s.theta, s.resolved)?;
                }
                Ok(())
            }),
        ));
    }
    // Default: graph of the local stable manifold on log-spaced x in [x0 / 100, x0].
    let n = ctx.grid(9)?;
    let tol = ctx.tol(1e-9)?;
    let xs: Vec<f64> = if n == 1 { vec![x0] } else { (0..n).map(|i| x0 * 0.01f64.powf(1.0 - i as f64 / (n - 1) as f64)).collect() };
    let g = mcgehee::stable_manifold_graph(&p, theta0, &xs, tol)?;
    Ok((
        true,
        Box::new(move |w, meta| {
            output::write_csv_header(w, meta)?;
            writeln!(w, "x,y,rho,y_over_x")?;
            for s in g {
                writeln!(w, "{},{},{},{}", s.x, s.y, s.rho, s.y / s.x)?;
            }
            Ok(())
        }),
    ))
}

fn certify_cmd(ctx: &mut Ctx, a: CertifyArgs) -> Result<Emit> {
    let ledger = ctx.cfg.get("ledger", a.ledger, LedgerArg::AppendixC)?;
    let max_depth = ctx.cfg.get("max_depth", a.max_depth, CertifyOptions::default().max_depth)?;
    let opts = CertifyOptions { max_depth, ..CertifyOptions::default() };
    let certs = match ledger {
        LedgerArg::AppendixC => certify::appendix_ledger(opts)?,
        LedgerArg::Q4 => certify::certify_q4_box(opts),
    };
    let ok = certs.iter().all(|c| c.is_proved());
    let proved = certs.iter().filter(|c| c.is_proved()).count();
    eprintln!("{proved} of {} certificates proved", certs.len());
    json_emit(ok, json!({ "ledger_sha256": certify::ledger::LEDGER_SHA256, "certificates": certs }))
}
