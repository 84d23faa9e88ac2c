use clap::Parser;

fn main() {
    env_logger::init();
    let cli = d4l_cli::Cli::parse();
    let code = d4l_cli::run(cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
