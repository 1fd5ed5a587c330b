fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    std::process::exit(timereise_cli::run_cli(std::env::args_os()));
}
