fn main() {
    let code = std::panic::catch_unwind(|| {
        let out = std::io::stdout();
        let err = std::io::stderr();
        ggp_cli::run(std::env::args_os(), &mut out.lock(), &mut err.lock())
    })
    .unwrap_or(ggp_cli::EXIT_INTERNAL);
    std::process::exit(code);
}
