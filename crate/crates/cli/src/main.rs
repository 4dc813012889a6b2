fn main() {
    std::process::exit(dnmg_cli::main_with(std::env::args_os()));
}
