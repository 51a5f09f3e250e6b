fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let code = vizketch_cli::run(&argv, &mut std::io::stdout().lock(), &mut std::io::stderr());
    std::process::exit(code);
}
