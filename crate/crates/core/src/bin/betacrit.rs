fn main() {
    std::process::exit(betacrit::cli::run(std::env::args_os()));
}
