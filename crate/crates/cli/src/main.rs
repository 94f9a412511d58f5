fn main() {
    std::process::exit(flocstab_cli::main_with(std::env::args_os()));
}
