//! Built-in experiment presets, one per reproduced figure.
//!
//! Each preset is a TOML fragment in the same grammar as a user config; a
//! config that names `preset = "figN"` is merged over it key by key.

pub const NAMES: [&str; 8] = ["fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11"];

const FIG4: &str = r#"
figure_id = "fig4"
metric = "ber"
protocols = ["p1", "p2", "conv_no_buffer_swipt", "conv_sd"]
[sweep]
variable = "snr_db"
range = [10.0, 30.0, 2.0]
"#;

const FIG5: &str = r#"
figure_id = "fig5"
metric = "ber"
protocols = ["p1", "p2"]
[sweep]
variable = "theta"
range = [0.1, 0.9, 0.1]
[series]
variable = "snr_db"
values = [20.0, 30.0]
"#;

const FIG6: &str = r#"
figure_id = "fig6"
metric = "ber"
protocols = ["p1", "p2"]
snr_db = 25.0
[sweep]
variable = "delta"
range = [0.2, 3.0, 0.2]
[series]
variable = "buffer_size"
values = [10.0, 50.0, 100.0]
"#;

const FIG7: &str = r#"
figure_id = "fig7"
metric = "ber"
protocols = ["p1", "p2", "conv_no_buffer_swipt", "conv_dcsk_relay"]
snr_db = 20.0
[sweep]
variable = "d_sr"
range = [0.2, 1.8, 0.2]
total_distance = 2.0
[params.taps_sr]
powers = [1.0]
delays = [0]
[params.taps_rd]
powers = [1.0]
delays = [0]
"#;

const FIG8: &str = r#"
figure_id = "fig8"
metric = "delay"
protocols = ["p1", "p2"]
snr_db = 30.0
slots = 1000000
[sweep]
variable = "delta"
range = [0.2, 2.6, 0.2]
[series]
variable = "buffer_size"
values = [10.0, 50.0, 100.0]
[params]
packet_bits = 1
"#;

const FIG9: &str = r#"
figure_id = "fig9"
metric = "delay"
protocols = ["p1", "p2"]
snr_db = 30.0
slots = 1000000
[sweep]
variable = "buffer_size"
range = [10.0, 100.0, 10.0]
[series]
variable = "delta"
values = [0.5, 1.0, 1.5]
[params]
packet_bits = 1
"#;

const FIG10: &str = r#"
figure_id = "fig10"
metric = "ber"
protocols = ["p1", "p2", "snr1", "snr2"]
[sweep]
variable = "snr_db"
range = [10.0, 30.0, 2.0]
"#;

const FIG11: &str = r#"
figure_id = "fig11"
metric = "delay"
protocols = ["p1", "p2", "snr1", "snr2"]
slots = 1000000
[sweep]
variable = "snr_db"
range = [10.0, 30.0, 2.0]
[params]
packet_bits = 1
"#;

/// TOML source of a named preset.
pub fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig4" => FIG4,
        "fig5" => FIG5,
        "fig6" => FIG6,
        "fig7" => FIG7,
        "fig8" => FIG8,
        "fig9" => FIG9,
        "fig10" => FIG10,
        "fig11" => FIG11,
        _ => return None,
    })
}
