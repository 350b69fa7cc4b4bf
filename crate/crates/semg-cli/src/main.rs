fn main() {
    std::process::exit(semg_cli::run_main(std::env::args_os()));
}
