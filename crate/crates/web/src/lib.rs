//! Browser demo. The [`demo`] functions take and return JSON strings so the
//! page needs no bindings beyond plain strings; the `wasm32` build exports
//! them through `wasm-bindgen`.

pub mod demo;

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn js(e: crate::demo::DemoError) -> JsError {
        JsError::new(&e.to_string())
    }

    #[wasm_bindgen]
    pub fn sample_instance(name: &str, seed: u32) -> Result<String, JsError> {
        crate::demo::sample_instance(name, u64::from(seed)).map_err(js)
    }

    #[wasm_bindgen]
    pub fn price(instance: &str, decimals: usize) -> Result<String, JsError> {
        crate::demo::price(instance, decimals).map_err(js)
    }

    #[wasm_bindgen]
    pub fn plot(
        instance: &str,
        side: &str,
        node: &str,
        lo: f64,
        hi: f64,
        points: usize,
    ) -> Result<String, JsError> {
        crate::demo::plot(instance, side, node, lo, hi, points).map_err(js)
    }

    #[wasm_bindgen]
    pub fn hedge(instance: &str, side: &str, cash: &str, shares: &str) -> Result<String, JsError> {
        crate::demo::hedge(instance, side, cash, shares).map_err(js)
    }
}
