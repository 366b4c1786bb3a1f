use std::path::Path;

fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("set by cargo");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = match cbindgen::Config::from_file(Path::new(&crate_dir).join("cbindgen.toml")) {
        Ok(c) => c,
        Err(e) => {
            println!("cargo:warning=cbindgen config error, keeping committed header: {e}");
            return;
        }
    };
    // Regenerate the committed header. Failure is a warning, not a build
    // error: the checked-in include/dsls.h stays authoritative.
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(Path::new(&crate_dir).join("include/dsls.h"));
        }
        Err(e) => println!("cargo:warning=cbindgen failed, keeping committed header: {e}"),
    }
}
