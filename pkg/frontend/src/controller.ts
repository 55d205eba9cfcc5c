// Orchestrates one session: socket messages in, audio/speech side effects
// out. Injected dependencies keep it testable without a browser; nothing in
// here interprets guidance or synthesizes sound.

import { decodePcmBlock, parseServerMessage, tapMessage, controlMessage } from './protocol.js'
import type { ControlState, PcmBlock } from './protocol.js'
import { SessionViewModel } from './view.js'

export interface ControllerDeps {
  send(text: string): void
  playBlock(block: PcmBlock): void
  speak(text: string): void
}

export class SessionController {
  readonly view = new SessionViewModel()
  blocksPlayed = 0

  constructor(private deps: ControllerDeps) {}

  onOpen(): void {
    this.view.connected()
  }

  onClose(): void {
    if (this.view.connection !== 'idle') this.view.disconnected()
  }

  onMessage(data: string | ArrayBuffer): void {
    if (typeof data === 'string') {
      const msg = parseServerMessage(data)
      if (!msg) return
      const result = this.view.handle(msg)
      if (result.speak) this.deps.speak(result.speak)
      return
    }
    // binary frames are PCM and always play: UI state never gates audio
    const block = decodePcmBlock(data)
    this.blocksPlayed += 1
    this.deps.playBlock(block)
  }

  sendControl(control: ControlState): void {
    if (this.view.connection === 'connected' && !this.view.finished) {
      this.deps.send(controlMessage(control))
    }
  }

  sendTap(): void {
    if (this.view.connection === 'connected' && !this.view.finished) {
      this.deps.send(tapMessage())
    }
  }
}
