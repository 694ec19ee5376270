use std::io;

fn main() {
    let verbosity = std::env::args()
        .skip(1)
        .map(|a| match a.as_str() {
            "--verbose" => 1,
            s if s.len() > 1 && s.starts_with('-') && s[1..].chars().all(|c| c == 'v') => s.len() - 1,
            _ => 0,
        })
        .sum::<usize>();
    let level = match verbosity {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = urbantactic::cli::main_with(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
