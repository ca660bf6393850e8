use clap::Parser;

fn main() {
    let cli = varlstm::cli::Cli::parse();
    std::process::exit(varlstm::cli::run(cli));
}
