fn main() {
    let stdout = std::io::stdout();
    if let Err(e) = rulecast_cli::run(std::env::args_os(), &mut stdout.lock()) {
        let msg = e.to_string();
        eprint!("{msg}");
        if !msg.ends_with('\n') {
            eprintln!();
        }
        std::process::exit(e.exit_code());
    }
}
