use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut stdout = std::io::stdout().lock();
    let code = match revising::cli::run(std::env::args_os(), &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = stdout.flush();
            let msg = e.to_string();
            eprint!("{msg}");
            if !msg.ends_with('\n') {
                eprintln!();
            }
            e.exit_code()
        }
    };
    let _ = stdout.flush();
    std::process::exit(code);
}
