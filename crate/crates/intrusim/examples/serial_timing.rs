//! Kernel tour: schedule events on the virtual clock and watch a serial
//! burst arrive byte by byte at baud-derived latency.
//!
//! ```sh
//! cargo run -p intrusim --example serial_timing
//! ```

use intrusim::kernel::{EventQueue, SerialChannel, SimTime};

fn main() {
    // Events fire in (time, insertion) order, never by accident.
    let mut queue = EventQueue::new();
    queue.schedule(SimTime::from_ms(500), "sample sensors").unwrap();
    queue.schedule(SimTime::from_ms(500), "blink led").unwrap();
    queue.schedule(SimTime::from_ms(200), "read adc").unwrap();

    println!("event queue, advanced to 1000 ms:");
    for fired in queue.advance_to(SimTime::from_ms(1000)).unwrap() {
        println!("  {:>5} -> {}", fired.at.to_string(), fired.payload);
    }

    // 9600 baud, 10-bit frames: one byte per millisecond.
    let mut line = SerialChannel::new(9600);
    let burst = b"ATD+2347048850497;\r\n";
    line.send(burst, SimTime::ZERO);
    println!(
        "\n{} byte dial burst at 9600 baud ({} ms/byte), sent at t=0:",
        burst.len(),
        line.per_byte_ms()
    );
    for t in [1, 10, burst.len() as u64] {
        let got = line.drain(SimTime::from_ms(t));
        println!(
            "  drained at {:>4} ms: {:2} byte(s) {:?}",
            t,
            got.len(),
            String::from_utf8_lossy(&got)
        );
    }
    println!("line idle from {}", line.busy_until());
}
