//! Protocol timing constants and per-band symbol parameters.
//!
//! All durations are expressed in symbols and converted to microsecond ticks
//! through the per-channel parameters, so every superframe, backoff and
//! airtime quantity is exact in integer ticks.

/// Maximum PSDU size in octets the PHY can carry.
pub const MAX_PHY_PACKET_SIZE: usize = 127;

/// RX-to-TX or TX-to-RX turnaround, in symbols.
pub const TURNAROUND_SYMBOLS: u64 = 12;

/// Duration of one CCA measurement, in symbols.
pub const CCA_SYMBOLS: u64 = 8;

/// One unit backoff period, in symbols.
pub const UNIT_BACKOFF_SYMBOLS: u64 = 20;

/// Symbols per superframe slot at superframe order 0.
pub const BASE_SLOT_DURATION_SYMBOLS: u64 = 60;

/// Slots in every superframe.
pub const NUM_SUPERFRAME_SLOTS: u64 = 16;

/// Symbols per superframe at superframe order 0 (60 x 16).
pub const BASE_SUPERFRAME_DURATION_SYMBOLS: u64 =
    BASE_SLOT_DURATION_SYMBOLS * NUM_SUPERFRAME_SLOTS;

/// Minimum CAP length in symbols; GTS allocation may not shrink the CAP
/// below this.
pub const MIN_CAP_SYMBOLS: u64 = 440;

/// Maximum number of GTS descriptors a coordinator may hold.
pub const MAX_GTS_DESCRIPTORS: usize = 7;

/// Consecutive missed beacons before a tracking device declares sync loss.
pub const MAX_LOST_BEACONS: u32 = 4;

/// Beacons a changed GTS descriptor stays advertised in.
pub const GTS_DESC_PERSISTENCE: u32 = 4;

/// Symbols a device waits for a command response frame after its request was
/// acknowledged (32 base superframe durations).
pub const RESPONSE_WAIT_SYMBOLS: u64 = 32 * BASE_SUPERFRAME_DURATION_SYMBOLS;

/// The beacon order / superframe order value that disables beacons.
pub const ORDER_NON_BEACON: u8 = 15;

/// Per-channel PHY parameters for the three supported narrow-band ranges.
///
/// Channel 0 is 868 MHz BPSK, channels 1-10 are 915 MHz BPSK, channels 11-26
/// are 2.4 GHz O-QPSK.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelParams {
    /// Symbol duration in microsecond ticks.
    pub symbol_us: u64,
    /// Symbols per data octet (2 for O-QPSK, 8 for BPSK).
    pub symbols_per_octet: u64,
    /// Synchronisation header (preamble + SFD) length in symbols.
    pub shr_symbols: u64,
}

impl ChannelParams {
    /// Parameters for `channel`, or None for channels above 26.
    pub fn for_channel(channel: u8) -> Option<ChannelParams> {
        match channel {
            0 => Some(ChannelParams {
                symbol_us: 50,
                symbols_per_octet: 8,
                shr_symbols: 40,
            }),
            1..=10 => Some(ChannelParams {
                symbol_us: 25,
                symbols_per_octet: 8,
                shr_symbols: 40,
            }),
            11..=26 => Some(ChannelParams {
                symbol_us: 16,
                symbols_per_octet: 2,
                shr_symbols: 10,
            }),
            _ => None,
        }
    }

    /// Microseconds for `n` symbols.
    pub fn symbols_us(&self, n: u64) -> u64 {
        n * self.symbol_us
    }

    /// On-air duration of a frame: SHR plus (PHR + PSDU) octets.
    pub fn airtime_us(&self, psdu_len: usize) -> u64 {
        self.symbols_us(self.shr_symbols + (1 + psdu_len as u64) * self.symbols_per_octet)
    }

    /// Symbols to wait for an acknowledgment after a transmission ends:
    /// one unit backoff period + turnaround + SHR + 6 octets (PHR + ack PSDU)
    /// at the channel rate. 54 symbols at 2.4 GHz.
    pub fn ack_wait_symbols(&self) -> u64 {
        UNIT_BACKOFF_SYMBOLS + TURNAROUND_SYMBOLS + self.shr_symbols + 6 * self.symbols_per_octet
    }
}

/// True iff `channel` is a valid channel number for any supported band.
pub fn channel_valid(channel: u8) -> bool {
    channel <= 26
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oqpsk_airtime_matches_byte_rate_formula() {
        // 250 kb/s => 2 symbols per byte at 16 µs per symbol; a 127-byte PSDU
        // behind the 6 header bytes is (6 + 127) * 2 * 16 µs.
        let p = ChannelParams::for_channel(11).unwrap();
        assert_eq!(p.airtime_us(127), (6 + 127) * 2 * 16);
        assert_eq!(p.airtime_us(127), 4256);
        assert_eq!(p.airtime_us(10), 512);
    }

    #[test]
    fn bpsk_bands_have_integer_tick_symbols() {
        let p868 = ChannelParams::for_channel(0).unwrap();
        assert_eq!(p868.symbol_us, 50);
        assert_eq!(p868.airtime_us(127), (40 + 128 * 8) * 50);
        let p915 = ChannelParams::for_channel(5).unwrap();
        assert_eq!(p915.symbol_us, 25);
    }

    #[test]
    fn ack_wait_is_54_symbols_at_2_4_ghz() {
        let p = ChannelParams::for_channel(11).unwrap();
        assert_eq!(p.ack_wait_symbols(), 54);
    }

    #[test]
    fn channel_27_is_invalid() {
        assert!(ChannelParams::for_channel(27).is_none());
        assert!(!channel_valid(27));
        assert!(channel_valid(26));
    }
}
