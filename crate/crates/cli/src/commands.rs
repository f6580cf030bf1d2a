use crate::render::{human, indices_field, pretty, write_text};
use crate::{Command, Exit, Format, GenKind, GlobalOpts, RunConfig};
use serde_json::{json, Map, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use wielandt_core::equality::{
    certify, check_equality, equivalence_report, maximal_t1, search_r_greater_1, verify_certificate, CertificateJson,
    CertifyOptions, ConditionReport,
};
use wielandt_core::inequalities::{lidskii_check, majorizes, wielandt_check, wielandt_scan, Verdict};
use wielandt_core::io::{frame_to_pairs, matrix_to_json, parse_matrix};
use wielandt_core::pencil::{trace_pencil, TraceOptions};
use wielandt_core::perturbation::first_order_rates;
use wielandt_core::random::{planted_equality, random_pair};
use wielandt_core::{eigh, Error, HermitianMatrix, IndexSet, Tolerances};

struct Ctx<'a> {
    opts: &'a GlobalOpts,
    tol: Tolerances,
    format: Format,
    config: RunConfig,
}

impl Ctx<'_> {
    fn envelope(&self, command: &str, body: Value) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(command));
        m.insert("config".into(), serde_json::to_value(&self.config).expect("config serializes"));
        if let Value::Object(fields) = body {
            m.extend(fields);
        }
        Value::Object(m)
    }

    /// Renders `value` as JSON or human text, or `csv` in csv mode.
    fn emit(&self, value: &Value, csv: impl FnOnce() -> String) -> Result<(), Exit> {
        let text = match self.format {
            Format::Json => pretty(value),
            Format::Human => human(value),
            Format::Csv => csv(),
        };
        write_text(&text, self.opts.out.as_deref())
    }

    fn load_pair(&self, a: &Path, b: &Path) -> Result<(HermitianMatrix, HermitianMatrix), Exit> {
        let a = load_matrix(a, self.tol.hermiticity)?;
        let b = load_matrix(b, self.tol.hermiticity)?;
        if a.dim() != b.dim() {
            return Err(Exit::input(format!("A is {0}x{0} but B is {1}x{1}", a.dim(), b.dim())));
        }
        Ok((a, b))
    }

    fn trace_options(&self) -> TraceOptions {
        TraceOptions {
            grid_size: self.opts.grid,
            tol_cluster: self.tol.cluster,
            ..TraceOptions::default()
        }
    }
}

fn load_matrix(path: &Path, tol: f64) -> Result<HermitianMatrix, Exit> {
    let text = std::fs::read_to_string(path).map_err(|e| Exit::input(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix(&text, tol).map_err(|e| Exit::input(format!("{}: {e}", path.display())))
}

fn tolerances(opts: &GlobalOpts) -> Result<Tolerances, Exit> {
    let tol = Tolerances {
        hermiticity: opts.herm_tol,
        cluster: opts.cluster_tol,
        equality: opts.tol,
        certification: opts.cert_tol.unwrap_or(opts.tol),
    };
    tol.validate().map_err(Exit::input)?;
    Ok(tol)
}

pub fn run(opts: &GlobalOpts, cmd: &Command) -> Result<u8, Exit> {
    let tol = tolerances(opts)?;
    if opts.grid < 2 {
        return Err(Exit::input("--grid must be at least 2"));
    }
    if !(opts.t_cap > 0.0 && opts.t_cap.is_finite()) {
        return Err(Exit::input("--t-cap must be positive and finite"));
    }
    let format = opts.format.unwrap_or(match cmd {
        Command::Trace { .. } => Format::Csv,
        _ => Format::Json,
    });
    let csv_capable = matches!(
        cmd,
        Command::Check { .. } | Command::Scan { .. } | Command::Trace { .. } | Command::Rates { .. }
    );
    if format == Format::Csv && !csv_capable {
        return Err(Exit::input("csv output is available for check, scan, trace and rates"));
    }
    let ctx = Ctx {
        opts,
        tol,
        format,
        config: RunConfig {
            tolerances: tol,
            grid_size: opts.grid,
            t_cap: opts.t_cap,
            scan_cap: opts.scan_cap,
            format,
            seed: opts.seed,
        },
    };
    match cmd {
        Command::Check { a, b, indices } => check(&ctx, a, b, indices),
        Command::Scan { a, b, k_min, k_max } => scan(&ctx, a, b, *k_min, *k_max),
        Command::Trace {
            a,
            b,
            t_lo,
            t_hi,
            crossings,
            no_refine,
        } => trace(&ctx, a, b, *t_lo, *t_hi, crossings.as_deref(), *no_refine),
        Command::Certify { a, b, indices, samples } => certify_cmd(&ctx, a, b, indices, *samples),
        Command::VerifyCert { certificate } => verify_cmd(&ctx, certificate),
        Command::Rates { a, b } => rates(&ctx, a, b),
        Command::Gen { kind, n, k, alpha, beta } => gen(&ctx, *kind, *n, *k, alpha, beta),
        Command::SearchR { n, k, trials } => search_r(&ctx, *n, *k, *trials),
    }
}

const REPORT_CSV_HEADER: &str = "indices,lhs,rhs,slack,verdict\n";

fn report_csv_row(r: &wielandt_core::InequalityReport) -> String {
    format!("{},{},{},{},{}\n", indices_field(&r.indices), r.lhs, r.rhs, r.slack, r.verdict)
}

fn check(ctx: &Ctx, a: &Path, b: &Path, indices: &str) -> Result<u8, Exit> {
    let (a, b) = ctx.load_pair(a, b)?;
    let s = IndexSet::parse(a.dim(), indices)?;
    let band = ctx.tol.equality_band(&a, &b);
    let report = wielandt_check(&a, &b, &s, band)?;
    let value = ctx.envelope("check", json!({ "band": band, "report": report }));
    ctx.emit(&value, || format!("{REPORT_CSV_HEADER}{}", report_csv_row(&report)))?;
    Ok(if report.verdict == Verdict::Violated { 1 } else { 0 })
}

fn scan(ctx: &Ctx, a: &Path, b: &Path, k_min: Option<usize>, k_max: Option<usize>) -> Result<u8, Exit> {
    let (a, b) = ctx.load_pair(a, b)?;
    let n = a.dim();
    let range = k_min.unwrap_or(1)..=k_max.unwrap_or(n.saturating_sub(1));
    let band = ctx.tol.equality_band(&a, &b);
    let reports = wielandt_scan(&a, &b, Some(range), band, ctx.opts.scan_cap)?;
    let lidskii = lidskii_check(&a, &b, band)?;
    let equality = reports.iter().filter(|r| r.verdict == Verdict::Equality).count();
    let violated = reports.iter().filter(|r| r.verdict == Verdict::Violated).count();
    let value = ctx.envelope(
        "scan",
        json!({
            "band": band,
            "count": reports.len(),
            "equality_count": equality,
            "violated_count": violated,
            "reports": reports,
            "lidskii": lidskii,
        }),
    );
    ctx.emit(&value, || {
        let mut s = String::from(REPORT_CSV_HEADER);
        for r in &reports {
            s.push_str(&report_csv_row(r));
        }
        s
    })?;
    Ok(if violated > 0 || !lidskii.majorization.holds { 1 } else { 0 })
}

fn trace(
    ctx: &Ctx,
    a: &Path,
    b: &Path,
    t_lo: f64,
    t_hi: f64,
    crossings_path: Option<&Path>,
    no_refine: bool,
) -> Result<u8, Exit> {
    let (a, b) = ctx.load_pair(a, b)?;
    let opts = TraceOptions {
        refine: !no_refine,
        ..ctx.trace_options()
    };
    let tr = trace_pencil(&a, &b, t_lo, t_hi, &opts)?;
    if ctx.format == Format::Csv {
        let sidecar: Option<PathBuf> = crossings_path
            .map(Path::to_path_buf)
            .or_else(|| ctx.opts.out.as_ref().map(|p| p.with_extension("crossings.json")));
        write_text(&tr.to_csv(), ctx.opts.out.as_deref())?;
        let crossings = pretty(&tr.crossings_json());
        match sidecar {
            Some(path) => write_text(&crossings, Some(&path))?,
            None => {
                for c in &tr.crossings {
                    eprintln!("crossing at t = {} (curves {:?})", c.t, c.curves);
                }
            }
        }
        return Ok(0);
    }
    let value = ctx.envelope(
        "trace",
        json!({
            "t_lo": t_lo,
            "t_hi": t_hi,
            "gap_tol": tr.gap_tol,
            "grid": tr.grid,
            "curves": tr.curves,
            "crossings": tr.crossings,
            "near_misses": tr.near_misses,
            "min_gaps": tr.min_gaps.iter().map(|g| if g.is_finite() { json!(g) } else { Value::Null }).collect::<Vec<_>>(),
        }),
    );
    ctx.emit(&value, String::new)?;
    Ok(0)
}

fn conditions_json(r: &ConditionReport) -> Value {
    json!({
        "condition1": r.condition1.as_ref().map(frame_to_pairs),
        "t1": r.t1,
        "condition2": r.condition2,
        "condition3": r.condition3,
        "best_rates": r.rates,
        "consistent": r.consistent,
    })
}

fn failure_json(e: &Error) -> Value {
    match e {
        Error::CertificationFailure {
            invariant,
            segment,
            t,
            deviation,
            tol,
        } => json!({
            "invariant": invariant,
            "segment": segment,
            "t": t,
            "deviation": deviation,
            "tol": tol,
            "message": e.to_string(),
        }),
        other => json!({ "message": other.to_string() }),
    }
}

fn certify_cmd(ctx: &Ctx, a: &Path, b: &Path, indices: &str, samples: usize) -> Result<u8, Exit> {
    let (a, b) = ctx.load_pair(a, b)?;
    let s = IndexSet::parse(a.dim(), indices)?;
    if samples < 2 {
        return Err(Exit::input("--samples must be at least 2"));
    }
    let report = check_equality(&a, &b, &s, &ctx.tol)?;
    if report.verdict != Verdict::Equality {
        let value = ctx.envelope(
            "certify",
            json!({ "status": "equality not detected", "report": report }),
        );
        ctx.emit(&value, String::new)?;
        return Ok(3);
    }
    let conditions = match equivalence_report(&a, &b, &s, &ctx.tol) {
        Ok(r) => conditions_json(&r),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let maximal = match maximal_t1(&a, &b, &s, &ctx.tol, ctx.opts.t_cap) {
        Ok(m) => serde_json::to_value(m).expect("serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let opts = CertifyOptions {
        samples_per_segment: samples,
        trace: ctx.trace_options(),
    };
    match certify(&a, &b, &s, &ctx.tol, &opts) {
        Ok(cert) => {
            let value = ctx.envelope(
                "certify",
                json!({
                    "status": "certified",
                    "report": report,
                    "certificate": cert.to_json(&a, &b),
                    "conditions": conditions,
                    "maximal_t1": maximal,
                }),
            );
            ctx.emit(&value, String::new)?;
            Ok(0)
        }
        Err(e @ Error::CertificationFailure { .. }) => {
            let value = ctx.envelope(
                "certify",
                json!({
                    "status": "certification failed",
                    "report": report,
                    "failure": failure_json(&e),
                    "conditions": conditions,
                }),
            );
            ctx.emit(&value, String::new)?;
            Ok(1)
        }
        Err(e) => Err(e.into()),
    }
}

fn verify_cmd(ctx: &Ctx, path: &Path) -> Result<u8, Exit> {
    let text = std::fs::read_to_string(path).map_err(|e| Exit::input(format!("cannot read {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| Exit::input(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("certificate") {
        value = inner.take();
    }
    let cert: CertificateJson =
        serde_json::from_value(value).map_err(|e| Exit::input(format!("{}: not a certificate: {e}", path.display())))?;
    match verify_certificate(&cert, &ctx.tol) {
        Ok(v) => {
            let out = ctx.envelope(
                "verify-cert",
                json!({
                    "status": "verified",
                    "indices": v.indices,
                    "r": v.r(),
                    "band": v.band,
                    "max_residual": v.max_residual(),
                    "curve_match": v.residuals,
                    "subspace_residuals": v.subspace_residuals,
                }),
            );
            ctx.emit(&out, String::new)?;
            Ok(0)
        }
        Err(e @ Error::CertificationFailure { .. }) => {
            let out = ctx.envelope("verify-cert", json!({ "status": "failed", "failure": failure_json(&e) }));
            ctx.emit(&out, String::new)?;
            Ok(1)
        }
        Err(e) => Err(e.into()),
    }
}

fn rates(ctx: &Ctx, a: &Path, b: &Path) -> Result<u8, Exit> {
    let (a, b) = ctx.load_pair(a, b)?;
    let r = first_order_rates(&a, &b, ctx.tol.cluster)?;
    let spectrum_b = eigh(&b)?.spectrum.values().to_vec();
    let sorted = r.sorted_nu();
    let majorization = majorizes(&sorted, &spectrum_b, ctx.tol.equality_band(&a, &b))?;
    let value = ctx.envelope(
        "rates",
        json!({
            "nu": r.nu,
            "sorted_nu": sorted,
            "spectrum_a": r.spectrum.values(),
            "cluster_multiplicities": r.clusters.multiplicities(),
            "spectrum_b": spectrum_b,
            "majorization": majorization,
        }),
    );
    ctx.emit(&value, || {
        let mut s = String::from("position,lambda_a,cluster,nu\n");
        for (j, nu) in r.nu.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", j + 1, r.spectrum.values()[j], r.clusters.cluster_of(j) + 1, nu);
        }
        s
    })?;
    Ok(0)
}

fn parse_triple(name: &str, text: &str) -> Result<[f64; 3], Exit> {
    let v: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Exit::input(format!("--{name} must be three comma separated numbers, got {text:?}")))?;
    v.try_into()
        .map_err(|_| Exit::input(format!("--{name} must have exactly three entries, got {text:?}")))
}

fn gen(ctx: &Ctx, kind: GenKind, n: usize, k: usize, alpha: &str, beta: &str) -> Result<u8, Exit> {
    let dir = ctx
        .opts
        .out
        .as_deref()
        .ok_or_else(|| Exit::input("gen needs --out DIR"))?;
    let seed = ctx.opts.seed;
    let (a, b, details) = match kind {
        GenKind::Random => {
            let (a, b) = random_pair(n, seed)?;
            (a, b, json!({ "n": n }))
        }
        GenKind::EqualityBlock => {
            let p = planted_equality(n, k, seed)?;
            let details = json!({
                "n": n,
                "k": k,
                "indices": p.indices,
                "planted_subspace": frame_to_pairs(&p.subspace),
                "features": p.features,
            });
            (p.a, p.b, details)
        }
        GenKind::ExampleS4 => {
            let al = parse_triple("alpha", alpha)?;
            let be = parse_triple("beta", beta)?;
            let a = HermitianMatrix::from_real_diagonal(&al);
            let b = HermitianMatrix::from_real_diagonal(&[be[2], be[0], be[1]]);
            let assumptions = al[0] > al[1] && al[1] == al[2] && be[0] > be[1] && be[1] >= be[2];
            let details = json!({
                "n": 3,
                "alpha": al,
                "beta": be,
                "assumptions_hold": assumptions,
                "indices": [3],
                "expected": {
                    "p": [2],
                    "subspace": [[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]],
                    "maximal_t1": (al[0] - al[1]) / (be[0] - be[2]),
                },
            });
            (a, b, details)
        }
    };
    std::fs::create_dir_all(dir).map_err(|e| Exit::input(format!("cannot create {}: {e}", dir.display())))?;
    let manifest = ctx.envelope(
        "gen",
        json!({
            "kind": kind,
            "files": { "a": "A.json", "b": "B.json" },
            "construction": details,
        }),
    );
    write_text(&matrix_to_json(&a), Some(&dir.join("A.json")))?;
    write_text(&matrix_to_json(&b), Some(&dir.join("B.json")))?;
    write_text(&pretty(&manifest), Some(&dir.join("manifest.json")))?;
    if ctx.format == Format::Human {
        print!("{}", human(&manifest));
    }
    Ok(0)
}

fn search_r(ctx: &Ctx, n: usize, k: usize, trials: usize) -> Result<u8, Exit> {
    let summary = search_r_greater_1(ctx.opts.seed, n, k, trials, &ctx.tol)?;
    let value = ctx.envelope(
        "search-r",
        json!({ "n": n, "k": k, "summary": summary }),
    );
    ctx.emit(&value, String::new)?;
    Ok(0)
}
