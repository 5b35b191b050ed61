use clap::Parser;
use xmeter_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match xmeter_cli::run(cli.command) {
        Ok(out) => {
            print!("{}", out.summary);
            for f in &out.files {
                log::info!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("xmeter: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
