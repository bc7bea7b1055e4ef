fn main() {
    std::process::exit(varosc::harness::cli::run(std::env::args_os()));
}
