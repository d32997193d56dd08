use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fbreg::cli::{run, AuditKind, Command, Invocation, RunConfig};

#[derive(Parser)]
#[command(name = "fbreg", about = "Minimizers of vectorial free-boundary energies and their regularity audits")]
struct Args {
    #[command(subcommand)]
    command: Option<Cmd>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Field to audit instead of `<out>/field.vfb`.
    #[arg(long, global = true)]
    field: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; falls back to FBREG_THREADS.
    #[arg(long, global = true, env = "FBREG_THREADS")]
    threads: Option<usize>,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
}

#[derive(Subcommand)]
enum Cmd {
    Solve,
    Audit {
        #[command(subcommand)]
        kind: AuditCmd,
    },
    Blowup,
    Decay,
    Epi {
        #[command(subcommand)]
        kind: EpiCmd,
    },
    Spectral,
    Oracle,
    Report,
}

#[derive(Subcommand)]
enum AuditCmd {
    Weiss,
    Nondeg,
    Growth,
    Variation,
    Holder,
}

#[derive(Subcommand)]
enum EpiCmd {
    Scan,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.print_defaults {
        print!("{}", RunConfig::defaults_toml());
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = args.command else {
        eprintln!("error: a subcommand is required (try --help)");
        return ExitCode::from(2);
    };
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let command = match cmd {
        Cmd::Solve => Command::Solve,
        Cmd::Audit { kind } => Command::Audit(match kind {
            AuditCmd::Weiss => AuditKind::Weiss,
            AuditCmd::Nondeg => AuditKind::Nondeg,
            AuditCmd::Growth => AuditKind::Growth,
            AuditCmd::Variation => AuditKind::Variation,
            AuditCmd::Holder => AuditKind::Holder,
        }),
        Cmd::Blowup => Command::Blowup,
        Cmd::Decay => Command::Decay,
        Cmd::Epi { kind: EpiCmd::Scan } => Command::EpiScan,
        Cmd::Spectral => Command::Spectral,
        Cmd::Oracle => Command::Oracle,
        Cmd::Report => Command::Report,
    };
    let inv = Invocation { command, config: args.config, out: args.out, field: args.field, seed: args.seed };
    match run(&inv) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
