fn main() {
    std::process::exit(shadow_engine::cli::run(std::env::args_os()));
}
