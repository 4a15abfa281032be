mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;
use ksvd::KsvdError;

use config::{Cli, Cmd, CommandKind, RunConfig};

fn exit_code(e: &KsvdError) -> u8 {
    match e {
        KsvdError::InvalidParameter(_) => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn resolve(cli: Cli) -> Result<RunConfig, KsvdError> {
    let (kind, args) = match cli.command {
        Cmd::Embed(a) => (CommandKind::Embed, a),
        Cmd::Graph(a) => (CommandKind::Graph, a),
        Cmd::Bicluster(a) => (CommandKind::Bicluster, a),
        Cmd::Bench(a) => (CommandKind::Bench, a),
        Cmd::Replay { config, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| KsvdError::Io { path: config.clone().into(), source: e })?;
            let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| KsvdError::Parse {
                path: config.clone().into(),
                line: e.line() as u64,
                column: e.column(),
                message: e.to_string(),
            })?;
            if let Some(out) = out {
                cfg.out = out;
            }
            return Ok(cfg);
        }
    };
    RunConfig::from_args(kind, args).map_err(KsvdError::InvalidParameter)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = resolve(cli).and_then(|cfg| run::execute(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
