fn main() {
    std::process::exit(matching_amg::cli::cli_main(std::env::args_os()));
}
