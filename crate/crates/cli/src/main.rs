use clap::error::ErrorKind;
use clap::Parser;
use srk_cli::args::Cli;
use srk_cli::{run, Caps, CliError};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => fail(CliError::Parse(e.to_string().trim_end().to_string())),
    };
    if let Err(e) = Caps::from_env().and_then(|caps| run(&cli.command, &caps)) {
        fail(e);
    }
}

fn fail(e: CliError) -> ! {
    eprintln!("{}", e.to_json());
    std::process::exit(e.exit_code())
}
