fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("ELLMAX_H".to_string()),
        cpp_compat: true,
        documentation: true,
        header: Some(
            "/* C ABI for the ellmax library: limit laws and second-order expansions\n \
             * for maxima of bivariate elliptical triangular arrays. */"
                .to_string(),
        ),
        ..Default::default()
    };
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("cbindgen failed")
        .write_to_file(format!("{crate_dir}/include/ellmax.h"));
    println!("cargo:rerun-if-changed=src/lib.rs");
}
