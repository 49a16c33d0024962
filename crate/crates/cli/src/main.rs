mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use qca_core::dirac::{self, ScalePoint};
use qca_core::multiparticle::{self, MultiState};
use qca_core::qca::{self, CellLattice, LocalCoin, QcaStepper};
use qca_core::verify::{self, Fault};
use qca_core::walk::{self, build_walk_unitary, walk_index, Coin};
use qca_core::{Dimension, LatticeSpec};
use serde::Serialize;

use config::{CoinDoc, EvolveSystem, ExperimentConfig, LatticeDoc, SlotDoc};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "qca",
    version,
    about = "Quantum walks, their fermionic extension and the Dirac limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenphases of every momentum block.
    Spectrum(CommonArgs),
    /// Lattice dispersion against the relativistic energy, with a convergence study.
    Dispersion(CommonArgs),
    /// Run the numerical verification suites.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Run a single named check.
        #[arg(long)]
        only: Option<String>,
        /// Corrupt the automaton coin (pair-creation | loss).
        #[arg(long)]
        inject_fault: Option<Fault>,
    },
    /// Time-evolve a localized initial state and report occupations.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Small multi-type automaton run with isomorphism and locality summaries.
    QcaDemo {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write artifacts into this directory instead of printing to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    dimension: Option<u8>,
    #[arg(long = "n", short = 'N')]
    n: Option<i64>,
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
}

impl CommonArgs {
    fn lattice_flags(&self) -> LatticeDoc {
        LatticeDoc {
            dimension: self.dimension,
            n: self.n,
            dx: self.dx,
            dt: self.dt,
            theta: self.theta,
        }
    }

    fn load(&self) -> anyhow::Result<Run> {
        let config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let seed = self.seed.or(config.seed).unwrap_or(0);
        let tol = self
            .tol
            .or(config.tol)
            .unwrap_or(verify::VerifyConfig::default().tol);
        if tol.is_nan() || tol <= 0.0 {
            bail!("tolerance must be positive, got {tol}");
        }
        Ok(Run {
            config,
            flags: self.lattice_flags(),
            out: self.out.clone(),
            seed,
            tol,
        })
    }
}

struct Run {
    config: ExperimentConfig,
    flags: LatticeDoc,
    out: Option<PathBuf>,
    seed: u64,
    tol: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    tol: f64,
    lattice: Option<LatticeSpec>,
    config: &'a ExperimentConfig,
}

impl Run {
    fn lattice_doc(&self) -> LatticeDoc {
        self.config
            .lattice
            .clone()
            .unwrap_or_default()
            .merged(&self.flags)
    }

    fn lattice(&self) -> anyhow::Result<LatticeSpec> {
        Ok(self.lattice_doc().build()?)
    }

    fn out_dir(&self) -> anyhow::Result<Option<&Path>> {
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(self.out.as_deref())
    }

    fn create(&self, dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    fn write_manifest(&self, command: &str, lattice: Option<LatticeSpec>) -> anyhow::Result<()> {
        if let Some(dir) = self.out_dir()? {
            let manifest = Manifest {
                command,
                seed: self.seed,
                tol: self.tol,
                lattice,
                config: &self.config,
            };
            let mut w = self.create(dir, "run.json")?;
            serde_json::to_writer_pretty(&mut w, &manifest)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Writes to `dir/name` when an output directory was given, else to stdout.
fn with_sink<F>(run: &Run, name: &str, f: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    match run.out_dir()? {
        Some(dir) => {
            let mut w = run.create(dir, name)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn cmd_spectrum(run: &Run) -> anyhow::Result<u8> {
    let spec = run.lattice()?;
    with_sink(run, "spectrum.csv", |w| {
        walk::write_spectrum_csv(&spec, w)?;
        Ok(())
    })?;
    run.write_manifest("spectrum", Some(spec))?;
    Ok(0)
}

#[derive(Serialize)]
struct ConvergenceReport<'a> {
    seed: u64,
    study: &'a dirac::ConvergenceStudy,
    dispersion_second_order: bool,
    generator_second_order: bool,
}

fn cmd_dispersion(run: &Run) -> anyhow::Result<u8> {
    let spec = run.lattice()?;
    let opts = &run.config.dispersion;
    let filter = opts.modes.as_ref().map(|ells| {
        ells.iter()
            .map(|[lx, ly]| spec.mode(*lx, *ly))
            .collect::<Vec<_>>()
    });
    let records = dirac::dispersion_table(&spec, filter.as_deref())?;

    let theta = opts.theta.unwrap_or(spec.theta);
    let base = match spec.dimension {
        Dimension::One => ScalePoint::one_d(opts.k_dx.map_or(0.1, |k| k[0]), theta),
        Dimension::Two => {
            let [kx, ky] = opts.k_dx.unwrap_or([0.1, 0.07]);
            ScalePoint::two_d(kx, ky, theta)
        }
    };
    let study = dirac::convergence_study(&base, opts.halvings)?;
    let report = ConvergenceReport {
        seed: run.seed,
        study: &study,
        dispersion_second_order: study.dispersion.second_order(),
        generator_second_order: study.generator.second_order(),
    };

    match run.out_dir()? {
        Some(dir) => {
            dirac::write_dispersion_csv(
                spec.dimension,
                &records,
                run.create(dir, "dispersion.csv")?,
            )?;
            dirac::write_convergence_csv(&study, run.create(dir, "convergence.csv")?)?;
            let mut w = run.create(dir, "convergence.json")?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            run.write_manifest("dispersion", Some(spec))?;
            println!(
                "dispersion order {} / generator order {}",
                fmt_order(&study.dispersion),
                fmt_order(&study.generator)
            );
        }
        None => {
            dirac::write_dispersion_csv(spec.dimension, &records, io::stdout().lock())?;
            let json = serde_json::to_string_pretty(&report)?;
            eprintln!("{json}");
        }
    }
    Ok(0)
}

fn fmt_order(fit: &dirac::OrderFit) -> String {
    match (fit.exact, fit.order) {
        (true, _) => "exact".to_string(),
        (false, Some(p)) => format!("{p:.3}"),
        (false, None) => "undetermined".to_string(),
    }
}

fn cmd_verify(run: &Run, only: Option<&str>, fault: Option<Fault>) -> anyhow::Result<u8> {
    let mut cfg = run.config.verify_config(&run.flags, run.seed, run.tol)?;
    if fault.is_some() {
        cfg.fault = fault;
    }
    let records = verify::run_verification(&cfg, only)?;
    for r in &records {
        eprintln!(
            "{:<26} {:>12.3e}  tol {:.1e}  {}",
            r.check,
            r.max_residual,
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    with_sink(run, "verify.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &records)?;
        writeln!(w)?;
        Ok(())
    })?;
    run.write_manifest("verify", None)?;
    Ok(if verify::all_pass(&records) {
        0
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn coin_of(doc: CoinDoc) -> Coin {
    match doc {
        CoinDoc::R => Coin::R,
        CoinDoc::L => Coin::L,
    }
}

type OccupationRow = (usize, usize, usize, f64, f64);

fn write_occupations(w: &mut dyn Write, rows: &[OccupationRow]) -> anyhow::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["step", "site", "type", "n_R", "n_L"])?;
    for (step, site, ty, nr, nl) in rows {
        csv.write_record([
            step.to_string(),
            site.to_string(),
            ty.to_string(),
            format!("{nr:.12e}"),
            format!("{nl:.12e}"),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Occupations of a multi-type automaton run, snapshot at every step.
fn run_qca(
    cells: CellLattice,
    coin: LocalCoin,
    initial: &[SlotDoc],
    steps: usize,
) -> anyhow::Result<Vec<OccupationRow>> {
    let mut bits = 0usize;
    for s in initial {
        if s.ty >= cells.n_types || s.site >= cells.n_sites {
            bail!(
                "initial slot (type {}, site {}) outside a {}x{} automaton",
                s.ty,
                s.site,
                cells.n_types,
                cells.n_sites
            );
        }
        let slot = cells.slot(s.ty, s.site, coin_of(s.dir).index());
        if bits & (1 << slot) != 0 {
            bail!(
                "slot (type {}, site {}, {:?}) occupied twice",
                s.ty,
                s.site,
                s.dir
            );
        }
        bits |= 1 << slot;
    }
    let stepper = QcaStepper::new(cells, coin);
    let mut state = cells.basis_state(bits);
    let mut rows = Vec::new();
    for step in 0..=steps {
        if step > 0 {
            state = stepper.step(&state)?;
        }
        rows.extend(
            qca::occupations(&cells, &state)
                .into_iter()
                .map(|(site, ty, nr, nl)| (step, site, ty, nr, nl)),
        );
    }
    Ok(rows)
}

fn default_initial() -> Vec<SlotDoc> {
    vec![SlotDoc {
        ty: 0,
        site: 0,
        dir: CoinDoc::R,
    }]
}

fn run_walk(spec: &LatticeSpec, run: &Run, steps: usize) -> anyhow::Result<Vec<OccupationRow>> {
    let opts = &run.config.evolve;
    let particles = &opts.particles;
    let n_max = opts.n_max.unwrap_or(particles.len().max(1));
    let ny = match spec.dimension {
        Dimension::One => 1,
        Dimension::Two => spec.n,
    };
    let walk_dim = spec.walk_dim();
    multiparticle::check_cap(walk_dim, n_max)?;
    let mut vectors = Vec::new();
    for p in particles {
        if p.x >= spec.n || p.y >= ny {
            bail!("particle at ({}, {}) is off the lattice", p.x, p.y);
        }
        let mut v = ndarray::Array1::zeros(walk_dim);
        v[walk_index(spec, p.x, p.y, coin_of(p.coin))] = num_complex::Complex64::new(1.0, 0.0);
        vectors.push(v);
    }
    let walk = build_walk_unitary(spec)?;
    let mut state = if vectors.is_empty() {
        MultiState::vacuum(walk_dim, n_max)?
    } else {
        multiparticle::antisymmetrized_product(walk_dim, n_max, &vectors)?
    };
    let mut rows = Vec::new();
    for step in 0..=steps {
        if step > 0 {
            state = multiparticle::total_evolution_apply_with(&walk, &state)?;
        }
        let occ = multiparticle::factor_occupations(&state);
        for site in 0..spec.num_sites() {
            for ty in 0..n_max {
                rows.push((step, site, ty, occ[[ty, 2 * site]], occ[[ty, 2 * site + 1]]));
            }
        }
    }
    Ok(rows)
}

fn cmd_evolve(run: &Run, steps: Option<usize>) -> anyhow::Result<u8> {
    let spec = run.lattice()?;
    let steps = steps.unwrap_or(run.config.evolve.steps);
    let rows = match run.config.evolve.system {
        EvolveSystem::Walk => run_walk(&spec, run, steps)?,
        EvolveSystem::Qca => {
            spec.require(Dimension::One)
                .map_err(|_| anyhow!("the automaton runs on a 1D ring; use a 1D lattice"))?;
            let q = &run.config.qca;
            let cells = CellLattice::new(q.sites.unwrap_or(spec.num_sites()), q.types)?;
            let coin = LocalCoin::with_double_phase(spec.theta, q.delta);
            let initial = q.initial.clone().unwrap_or_else(default_initial);
            run_qca(cells, coin, &initial, steps)?
        }
    };
    with_sink(run, "evolve.csv", |w| write_occupations(w, &rows))?;
    run.write_manifest("evolve", Some(spec))?;
    Ok(0)
}

#[derive(Serialize)]
struct DemoSummary {
    sites: usize,
    types: usize,
    steps: usize,
    isomorphism: qca::IsomorphismReport,
    locality: qca::LocalityReport,
}

fn cmd_qca_demo(run: &Run, steps: Option<usize>) -> anyhow::Result<u8> {
    let doc = run.lattice_doc();
    let theta = doc.theta.unwrap_or(0.3);
    let q = &run.config.qca;
    let sites = q.sites.or(doc.n.map(|n| n.max(0) as usize)).unwrap_or(3);
    let types = if run.config.qca.types > 1 {
        run.config.qca.types
    } else {
        2
    };
    let steps = steps.unwrap_or(4);
    let cells = CellLattice::new(sites, types)?;
    let coin = LocalCoin::with_double_phase(theta, q.delta);
    let initial = q.initial.clone().unwrap_or_else(|| {
        vec![
            SlotDoc {
                ty: 0,
                site: 0,
                dir: CoinDoc::R,
            },
            SlotDoc {
                ty: 1,
                site: 1 % sites,
                dir: CoinDoc::L,
            },
        ]
    });
    let rows = run_qca(cells, coin.clone(), &initial, steps)?;

    let isomorphism = qca::one_particle_sector_isomorphism(&cells, &coin, theta)?;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(run.seed);
    let locality = qca::locality_check(&QcaStepper::new(cells, coin), &mut rng)?;
    let summary = DemoSummary {
        sites,
        types,
        steps,
        isomorphism,
        locality,
    };

    with_sink(run, "qca_demo.csv", |w| write_occupations(w, &rows))?;
    let json = serde_json::to_string_pretty(&summary)?;
    match run.out_dir()? {
        Some(dir) => {
            let mut w = run.create(dir, "qca_demo.json")?;
            writeln!(w, "{json}")?;
            run.write_manifest("qca-demo", None)?;
        }
        None => eprintln!("{json}"),
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Spectrum(c) => cmd_spectrum(&c.load()?),
        Command::Dispersion(c) => cmd_dispersion(&c.load()?),
        Command::Verify {
            common,
            only,
            inject_fault,
        } => cmd_verify(&common.load()?, only.as_deref(), inject_fault),
        Command::Evolve { common, steps } => cmd_evolve(&common.load()?, steps),
        Command::QcaDemo { common, steps } => cmd_qca_demo(&common.load()?, steps),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
