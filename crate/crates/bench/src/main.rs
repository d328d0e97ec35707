fn main() {
    std::process::exit(doa_bench::cli::run(std::env::args_os()));
}
