// Gapless PCM playback: each 20 ms block becomes an AudioBuffer scheduled
// back to back on a running clock, with a small safety lead so late blocks
// do not click.

import type { PcmBlock } from './protocol.js'

const SAFETY_LEAD = 0.04 // seconds of slack before the first sample plays

export class PcmPlayer {
  private ctx: AudioContext | null = null
  private queueTime = 0

  constructor(private sampleRate = 48000) {}

  async ensure(): Promise<void> {
    if (this.ctx) return
    this.ctx = new AudioContext({ sampleRate: this.sampleRate })
    await this.ctx.resume()
    this.queueTime = this.ctx.currentTime + SAFETY_LEAD
  }

  play(block: PcmBlock): void {
    if (!this.ctx) return
    const buffer = this.ctx.createBuffer(2, block.frameCount, this.sampleRate)
    buffer.copyToChannel(block.left, 0)
    buffer.copyToChannel(block.right, 1)
    const source = this.ctx.createBufferSource()
    source.buffer = buffer
    source.connect(this.ctx.destination)
    const at = Math.max(this.queueTime, this.ctx.currentTime + 0.005)
    source.start(at)
    this.queueTime = at + buffer.duration
  }

  /** Seconds of audio queued ahead of the output clock. */
  get bufferedSeconds(): number {
    return this.ctx ? Math.max(0, this.queueTime - this.ctx.currentTime) : 0
  }

  async close(): Promise<void> {
    if (this.ctx) {
      await this.ctx.close()
      this.ctx = null
    }
  }
}
