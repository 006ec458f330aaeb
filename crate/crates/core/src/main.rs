fn main() {
    std::process::exit(chaingraph::cli::run_subcommand(std::env::args_os()));
}
