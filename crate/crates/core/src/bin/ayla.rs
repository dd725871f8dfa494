fn main() {
    std::process::exit(ayla_core::cli_main(std::env::args_os()));
}
