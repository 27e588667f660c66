use clap::Parser;

fn main() {
    let cli = stiffopt_cli::Cli::parse();
    let report = stiffopt_cli::run(&cli);
    if !report.stdout.is_empty() {
        print!("{}", report.stdout);
    }
    if !report.stderr.is_empty() {
        eprint!("{}", report.stderr);
    }
    std::process::exit(report.status);
}
