fn main() {
    std::process::exit(npc_cli::commands::main_with_args(std::env::args_os()));
}
