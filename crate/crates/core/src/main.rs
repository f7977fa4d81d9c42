fn main() {
    std::process::exit(ldp_bench::cli::main_with_args(std::env::args_os()));
}
