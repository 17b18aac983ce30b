use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use tradeoff_ann::bench::{dd_params, di_params, run_bench, sphere_view, BenchConfig, Structure, Workload};
use tradeoff_ann::dd_tree::DDTree;
use tradeoff_ann::filter_tree::FilterTree;
use tradeoff_ann::io::{read_dataset, read_points, read_tree, write_dataset, write_tree, AnyTree};
use tradeoff_ann::lower_bounds::{
    list_of_points_detail, list_of_points_max_rho_u, one_probe_schedule_exponent, one_probe_space_exponent,
};
use tradeoff_ann::points::{dist, Space};
use tradeoff_ann::reductions::hamming_to_sphere;
use tradeoff_ann::tradeoff::{
    curve_point, random_curve, solve_thresholds_with, worst_case_curve, worst_case_rho_u,
    Target,
};
use tradeoff_ann::{instance, Error};

#[derive(Parser)]
#[command(name = "tradeoff-ann", version, about = "Space/time trade-off nearest neighbor search")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a planted instance: <out>.points.bin, <out>.queries.bin, <out>.meta.json.
    Gen(GenArgs),
    /// Build a tree over a dataset and serialize it.
    Build(BuildArgs),
    /// Answer a query file with a serialized tree (CSV on stdout).
    Query(QueryArgs),
    /// Generate, build and query; print a report.
    Bench(BenchArgs),
    /// Trade-off exponents and thresholds.
    Solve(SolveArgs),
    /// Lower-bound curves.
    Lb(LbArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Sphere,
    Hamming,
    Clustered,
}

#[derive(Args)]
struct WorkloadArgs {
    #[arg(long, value_enum, default_value = "sphere")]
    kind: Kind,
    #[arg(long, default_value_t = 128)]
    d: usize,
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long, default_value_t = 200)]
    queries: usize,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long, default_value_t = 0.5)]
    radius_factor: f64,
}

impl WorkloadArgs {
    fn workload(&self) -> Workload {
        match self.kind {
            Kind::Sphere => Workload::Sphere,
            Kind::Hamming => Workload::Hamming,
            Kind::Clustered => Workload::Clustered { clusters: self.clusters, radius_factor: self.radius_factor },
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    w: WorkloadArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path stem.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long, value_enum, default_value = "di")]
    structure: StructureArg,
    /// Depth K (default round(√ln n)).
    #[arg(long)]
    k: Option<u32>,
    /// Success constant C in T = ⌈C/G⌉.
    #[arg(long, default_value_t = 3.0)]
    success_const: f64,
    /// Target ρ_q (default: balanced).
    #[arg(long)]
    rho_q: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StructureArg {
    Di,
    Dd,
}

impl From<StructureArg> for Structure {
    fn from(s: StructureArg) -> Structure {
        match s {
            StructureArg::Di => Structure::Di,
            StructureArg::Dd => Structure::Dd,
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Dataset stem or .meta.json path.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    t: TreeArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Dataset stem or .meta.json path (the points the tree was built on).
    #[arg(long)]
    data: PathBuf,
    /// Query file; defaults to the dataset's own queries.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Accept radius in the dataset's metric; defaults to the instance's.
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    w: WorkloadArgs,
    #[command(flatten)]
    t: TreeArgs,
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated dataset sizes for the exponent fit.
    #[arg(long, value_delimiter = ',')]
    series: Vec<usize>,
    /// Walk the whole tree instead of stopping at the first hit.
    #[arg(long)]
    full_walk: bool,
    /// Omit the [timing] section.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Regime {
    Random,
    Worst,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    c: f64,
    #[arg(long, value_enum, default_value = "random")]
    regime: Regime,
    #[arg(long, conflicts_with = "rho_u")]
    rho_q: Option<f64>,
    #[arg(long)]
    rho_u: Option<f64>,
    /// Print the whole curve on this many points instead.
    #[arg(long)]
    grid: Option<usize>,
    /// Near distance for thresholds (random regime default √2/c).
    #[arg(long)]
    r: Option<f64>,
    /// Dataset size; when given, thresholds and branching are solved too.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, default_value_t = 100.0)]
    success_const: f64,
}

#[derive(Args)]
struct LbArgs {
    #[arg(long)]
    c: f64,
    /// List-of-points curve.
    #[arg(long)]
    list_of_points: bool,
    /// One-probe space exponent.
    #[arg(long)]
    one_probe: bool,
    #[arg(long)]
    rho_u: Option<f64>,
    #[arg(long, default_value_t = 21)]
    grid: usize,
    /// Dataset sizes for the one-probe schedule correction.
    #[arg(long, value_delimiter = ',')]
    n: Vec<f64>,
}

fn fmt(x: f64) -> String {
    format!("{x:.12}")
}

fn gen(a: GenArgs) -> Result<(), Error> {
    let inst = a.w.workload().generate(a.n, a.w.d, a.w.c, a.w.queries, a.seed)?;
    if let Some(w) = instance::dimension_warning(a.n, a.w.d) {
        eprintln!("warning: {w}");
    }
    let mut params = BTreeMap::from([("c".to_string(), a.w.c)]);
    if let Kind::Clustered = a.w.kind {
        params.insert("clusters".into(), a.w.clusters as f64);
        params.insert("radius_factor".into(), a.w.radius_factor);
    }
    write_dataset(&a.out, &inst, a.w.workload().name(), a.seed, params)?;
    println!("wrote {} points, {} queries (dim {})", inst.points.len(), inst.queries.len(), inst.points.dim());
    Ok(())
}

fn build(a: BuildArgs) -> Result<(), Error> {
    let (inst, _) = read_dataset(&a.data)?;
    let view = sphere_view(&inst)?;
    let n = view.points.len();
    let tree = match Structure::from(a.t.structure) {
        Structure::Di => {
            let target = a.t.rho_q.map_or(Target::Balanced, Target::RhoQ);
            let p = di_params(view.c(), view.r, target, n, a.t.k, a.t.success_const)?;
            let t = FilterTree::build(&view.points, &p, a.seed)?;
            println!("di tree: {} nodes, {} stored points, T={} K={}", t.node_count(), t.stored_points(), p.t, p.k);
            AnyTree::Di(t)
        }
        Structure::Dd => {
            let dp = dd_params(view.points.dim(), a.t.k, a.t.rho_q, a.t.success_const);
            let t = DDTree::build(&view.points, view.c(), view.r, &dp, a.seed)?;
            println!("dd tree: {} nodes, {} stored points", t.nodes().len(), t.stats().stored_points);
            AnyTree::Dd(t)
        }
    };
    write_tree(&a.out, &tree)
}

fn query(a: QueryArgs) -> Result<(), Error> {
    let (inst, _) = read_dataset(&a.data)?;
    let view = sphere_view(&inst)?;
    let mut queries = match &a.queries {
        Some(p) => read_points(p)?,
        None => inst.queries.clone(),
    };
    if queries.dim() != inst.points.dim() || queries.space() != inst.points.space() {
        return Err(Error::Format("query file does not match the dataset's dimension or space".into()));
    }
    if queries.space() == Space::Hamming {
        queries = hamming_to_sphere(&queries)?;
    }
    let accept = match a.radius {
        Some(x) if inst.truth.space == Space::Hamming => inst.truth.to_sphere_distance(x),
        Some(x) => x,
        None => view.accept,
    };
    let tree = read_tree(&a.tree)?;
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "query,found,distance,nodes_visited,points_scanned")?;
    let mut hits = 0usize;
    for (qi, q) in queries.rows().enumerate() {
        let (found, nodes, scanned) = match &tree {
            AnyTree::Di(t) => {
                t.check_dataset(&view.points)?;
                let o = t.query(&view.points, q, accept);
                (o.found, o.stats.nodes_visited, o.stats.points_scanned)
            }
            AnyTree::Dd(t) => {
                t.check_dataset(&view.points)?;
                let o = t.query(&view.points, q, accept);
                (o.found, o.stats.nodes_visited, o.stats.points_scanned)
            }
        };
        let (f, d) = match found {
            Some(p) => {
                hits += 1;
                (p.to_string(), fmt(dist(q, view.points.row(p as usize))))
            }
            None => ("-".into(), "-".into()),
        };
        writeln!(out, "{qi},{f},{d},{nodes},{scanned}")?;
    }
    eprintln!("answered {hits}/{} queries", queries.len());
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), Error> {
    let cfg = BenchConfig {
        structure: a.t.structure.into(),
        workload: a.w.workload(),
        n: a.n,
        d: a.w.d,
        c: a.w.c,
        q_count: a.w.queries,
        seed: a.seed,
        k: a.t.k,
        success_const: a.t.success_const,
        rho_q: a.t.rho_q,
        series: a.series,
        full_walk: a.full_walk,
    };
    let rep = run_bench(&cfg)?;
    let text = if a.no_timing { rep.render_deterministic() } else { rep.render() };
    match a.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Result<(), Error> {
    if let Some(g) = a.grid {
        let curve = match a.regime {
            Regime::Random => random_curve(a.c, g)?,
            Regime::Worst => worst_case_curve(a.c, g)?,
        };
        println!("rho_q,rho_u,space_exponent");
        for (q, u) in curve {
            println!("{},{},{}", fmt(q), fmt(u), fmt(1.0 + u));
        }
        return Ok(());
    }
    let r = match (a.r, a.regime) {
        (Some(r), _) => Some(r),
        (None, Regime::Random) => Some(std::f64::consts::SQRT_2 / a.c),
        (None, Regime::Worst) => None,
    };
    let target = match (a.rho_q, a.rho_u) {
        (Some(q), _) => Target::RhoQ(q),
        (None, Some(u)) => Target::RhoU(u),
        (None, None) => Target::Balanced,
    };
    let Some(r) = r else {
        // Worst-case exponents are the r → 0 limit; no thresholds without a concrete r.
        let (q, u) = match target {
            Target::RhoQ(q) => (q, worst_case_rho_u(a.c, q)?),
            Target::RhoU(u) => {
                let c2 = a.c * a.c;
                let x = (2.0 * a.c - (c2 - 1.0) * u.sqrt()) / (c2 + 1.0);
                if x < 0.0 || u < 0.0 {
                    return Err(Error::Infeasible { what: format!("rho_u = {u}"), lo: 0.0, hi: (2.0 * a.c / (c2 - 1.0)).powi(2) });
                }
                (x * x, u)
            }
            Target::Balanced => {
                let x = 2.0 * a.c / (2.0 * a.c * a.c);
                (x * x, x * x)
            }
        };
        println!("rho_q,rho_u,space_exponent");
        println!("{},{},{}", fmt(q), fmt(u), fmt(1.0 + u));
        return Ok(());
    };
    let mut p = curve_point(a.c, r, target)?;
    print!("c,r,rho_q,rho_u,space_exponent,sigma_exp,tau_exp");
    if let Some(n) = a.n {
        let k = a.k.unwrap_or_else(|| tradeoff_ann::tradeoff::default_k(n));
        p = solve_thresholds_with(&p, n, k, a.success_const)?;
        println!(",eta_u,eta_q,T,K");
    } else {
        println!();
    }
    print!(
        "{},{},{},{},{},{},{}",
        a.c,
        fmt(p.r),
        fmt(p.rho_q),
        fmt(p.rho_u),
        fmt(p.space_exponent()),
        fmt(p.sigma_exp),
        fmt(p.tau_exp)
    );
    if p.is_solved() {
        println!(",{},{},{},{}", fmt(p.eta_u), fmt(p.eta_q), p.t, p.k);
    } else {
        println!();
    }
    Ok(())
}

fn lb(a: LbArgs) -> Result<(), Error> {
    if a.list_of_points == a.one_probe {
        return Err(Error::Domain("pick exactly one of --list-of-points and --one-probe".into()));
    }
    if a.list_of_points {
        let rows: Vec<f64> = match a.rho_u {
            Some(u) => vec![u],
            None => {
                if a.grid < 2 {
                    return Err(Error::Domain("grid must have at least 2 points".into()));
                }
                let hi = list_of_points_max_rho_u(a.c)?;
                (0..a.grid).map(|i| hi * i as f64 / (a.grid - 1) as f64).collect()
            }
        };
        println!("c,rho_u,rho_q,regime,p,q");
        for u in rows {
            let (rq, regime, p, q) = list_of_points_detail(a.c, u)?;
            println!("{},{},{},{:?},{},{}", a.c, fmt(u), fmt(rq), regime, p, q);
        }
    } else {
        println!("c,n,space_exponent,schedule_exponent");
        let limit = one_probe_space_exponent(a.c)?;
        println!("{},inf,{},{}", a.c, fmt(limit), fmt(limit));
        for &n in &a.n {
            println!("{},{},{},{}", a.c, n, fmt(limit), fmt(one_probe_schedule_exponent(a.c, n)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Build(a) => build(a),
        Cmd::Query(a) => query(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Solve(a) => solve(a),
        Cmd::Lb(a) => lb(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Format(_) | Error::Io(_) | Error::Empty(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
