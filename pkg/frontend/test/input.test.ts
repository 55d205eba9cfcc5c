import { describe, expect, it } from 'vitest'

import { KeyboardInput } from '../src/input.js'
import type { KeyEvent } from '../src/input.js'

function makeInput() {
  const handlers: Record<string, Array<(ev: KeyEvent) => void>> = { keydown: [], keyup: [] }
  const source = {
    addEventListener(type: 'keydown' | 'keyup', handler: (ev: KeyEvent) => void) {
      handlers[type].push(handler)
    },
  }
  const input = new KeyboardInput(source)
  const press = (code: string, repeat = false) =>
    handlers.keydown.forEach((h) => h({ code, repeat }))
  const release = (code: string) => handlers.keyup.forEach((h) => h({ code }))
  return { input, press, release }
}

describe('KeyboardInput', () => {
  it('maps arrows to forward and turn', () => {
    const { input, press, release } = makeInput()
    press('ArrowUp')
    press('ArrowLeft')
    let c = input.control()
    expect(c.forward).toBe(1)
    expect(c.turn).toBeCloseTo(Math.PI / 6)
    release('ArrowLeft')
    press('ArrowRight')
    c = input.control()
    expect(c.turn).toBeCloseTo(-Math.PI / 6)
    release('ArrowUp')
    release('ArrowRight')
    expect(input.control()).toEqual({ forward: 0, turn: 0, sidestep: 0, pitch_rate: 0 })
  })

  it('maps A/D to sidesteps and Q/E to pitch', () => {
    const { input, press } = makeInput()
    press('KeyA')
    expect(input.control().sidestep).toBe(0.5)
    press('KeyD')
    expect(input.control().sidestep).toBe(0)
    press('KeyE')
    expect(input.control().pitch_rate).toBeCloseTo(Math.PI / 6)
  })

  it('space is an edge-triggered tap, auto-repeat ignored', () => {
    const { input, press } = makeInput()
    press('Space')
    press('Space', true) // key auto-repeat
    expect(input.takeTap()).toBe(true)
    expect(input.takeTap()).toBe(false)
    press('Space')
    press('Space')
    expect(input.takeTap()).toBe(true)
    expect(input.takeTap()).toBe(true)
    expect(input.takeTap()).toBe(false)
  })

  it('B queues blindfold toggles', () => {
    const { input, press } = makeInput()
    expect(input.takeBlindfoldToggle()).toBe(false)
    press('KeyB')
    expect(input.takeBlindfoldToggle()).toBe(true)
    expect(input.takeBlindfoldToggle()).toBe(false)
  })

  it('ignores keys it does not own', () => {
    const { input, press } = makeInput()
    press('KeyZ')
    expect(input.control()).toEqual({ forward: 0, turn: 0, sidestep: 0, pitch_rate: 0 })
  })
})
