fn main() {
    std::process::exit(iga_machine::run(std::env::args_os()));
}
