// Keyboard-only steering, so the eyes-free condition stays honest.
// Arrow keys move/turn, A/D sidestep, Q/E tilt the virtual device,
// space requests the spoken hint, B toggles the blindfold.

import type { ControlState } from './protocol.js'

export interface KeyEvent {
  code: string
  repeat?: boolean
  preventDefault?: () => void
}

export interface KeyEventSource {
  addEventListener(type: 'keydown' | 'keyup', handler: (ev: KeyEvent) => void): void
}

const FORWARD_SPEED = 1.0     // m/s
const BACKWARD_SPEED = 0.4
const TURN_RATE = Math.PI / 6 // 30 deg/s
const SIDESTEP_SPEED = 0.5
const PITCH_RATE = Math.PI / 6

const HANDLED = new Set([
  'ArrowUp', 'ArrowDown', 'ArrowLeft', 'ArrowRight',
  'KeyA', 'KeyD', 'KeyQ', 'KeyE', 'Space', 'KeyB',
])

export class KeyboardInput {
  private down = new Set<string>()
  private taps = 0
  private blindfoldToggles = 0

  constructor(source: KeyEventSource) {
    source.addEventListener('keydown', (ev) => {
      if (!HANDLED.has(ev.code)) return
      ev.preventDefault?.()
      if (ev.repeat) return
      if (ev.code === 'Space') this.taps += 1
      else if (ev.code === 'KeyB') this.blindfoldToggles += 1
      else this.down.add(ev.code)
    })
    source.addEventListener('keyup', (ev) => {
      this.down.delete(ev.code)
    })
  }

  control(): ControlState {
    let forward = 0
    let turn = 0
    let sidestep = 0
    let pitch = 0
    if (this.down.has('ArrowUp')) forward += FORWARD_SPEED
    if (this.down.has('ArrowDown')) forward -= BACKWARD_SPEED
    if (this.down.has('ArrowLeft')) turn += TURN_RATE
    if (this.down.has('ArrowRight')) turn -= TURN_RATE
    if (this.down.has('KeyA')) sidestep += SIDESTEP_SPEED
    if (this.down.has('KeyD')) sidestep -= SIDESTEP_SPEED
    if (this.down.has('KeyQ')) pitch -= PITCH_RATE
    if (this.down.has('KeyE')) pitch += PITCH_RATE
    return { forward, turn, sidestep, pitch_rate: pitch }
  }

  takeTap(): boolean {
    if (this.taps > 0) {
      this.taps -= 1
      return true
    }
    return false
  }

  takeBlindfoldToggle(): boolean {
    if (this.blindfoldToggles > 0) {
      this.blindfoldToggles -= 1
      return true
    }
    return false
  }
}

export const KEY_BINDINGS: Array<[string, string]> = [
  ['Arrow Up / Down', 'walk forward / back up'],
  ['Arrow Left / Right', 'turn left / right'],
  ['A / D', 'sidestep left / right'],
  ['Q / E', 'tilt device down / up'],
  ['Space', 'speak the current instruction'],
  ['B', 'toggle blindfold (map hidden, audio untouched)'],
]
