fn main() {
    std::process::exit(relumesh_cli::run(std::env::args_os()));
}
