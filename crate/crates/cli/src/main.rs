fn main() {
    std::process::exit(clfbench_cli::run(std::env::args_os()));
}
