use std::io::IsTerminal;

use clap::Parser;

use rbcgs::cli::{run, Cli, Console};

fn main() {
    let cli = Cli::parse();
    let color =
        std::io::stdout().is_terminal() && std::env::var("ISS_COLOR").map_or(true, |v| v != "0");
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    let mut console = Console {
        out: &mut out,
        err: &mut err,
        color,
    };
    std::process::exit(run(&cli, &mut console));
}
