use clap::Parser;

fn main() {
    let cli = atlas_cli::Cli::parse();
    let code = atlas_cli::run(&cli, &mut std::io::stdout().lock());
    std::process::exit(code);
}
