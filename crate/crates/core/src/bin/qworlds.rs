use clap::Parser;

fn main() {
    let cli = qworlds::cli::Cli::parse();
    std::process::exit(qworlds::cli::main_with(cli));
}
