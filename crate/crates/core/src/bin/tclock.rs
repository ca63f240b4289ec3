fn main() {
    std::process::exit(treeclock::cli::main_with_args(std::env::args_os()));
}
