// Browser bootstrap: DOM wiring only. All logic that deserves tests lives
// in controller/view/input/protocol.

import { PcmPlayer } from './audio.js'
import { SessionController } from './controller.js'
import { KEY_BINDINGS, KeyboardInput } from './input.js'
import { drawBlindfold, drawMap } from './map.js'
import { IDLE_CONTROL, sameControl } from './protocol.js'
import type { ControlState } from './protocol.js'
import { localeTag, speak } from './speech.js'
import { metricsRows } from './view.js'

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id)
  if (!el) throw new Error(`missing element #${id}`)
  return el as T
}

const urlInput = $<HTMLInputElement>('url')
const connectBtn = $<HTMLButtonElement>('connect')
const blindfoldBtn = $<HTMLButtonElement>('blindfold')
const statusEl = $('status')
const instructionEl = $('instruction')
const feedEl = $('feed')
const metricsEl = $('metrics')
const canvas = $<HTMLCanvasElement>('map')
const helpEl = $('help')

helpEl.innerHTML = KEY_BINDINGS
  .map(([key, what]) => `<dt>${key}</dt><dd>${what}</dd>`)
  .join('')

let player = new PcmPlayer()
let socket: WebSocket | null = null
let locale = 'it-IT'

const controller = new SessionController({
  send: (text) => socket?.send(text),
  playBlock: (block) => player.play(block),
  speak: (text) => speak(text, locale),
})
const view = controller.view
const input = new KeyboardInput(window)

connectBtn.addEventListener('click', () => {
  if (socket) {
    socket.close()
    socket = null
  }
  // the click is the user gesture that unlocks audio
  player = new PcmPlayer()
  void player.ensure()
  view.connecting()
  const ws = new WebSocket(urlInput.value)
  ws.binaryType = 'arraybuffer'
  ws.onopen = () => controller.onOpen()
  ws.onclose = () => controller.onClose()
  ws.onerror = () => controller.onClose()
  ws.onmessage = (ev) => {
    if (typeof ev.data === 'string') controller.onMessage(ev.data)
    else controller.onMessage(ev.data as ArrayBuffer)
  }
  socket = ws
})

blindfoldBtn.addEventListener('click', () => view.toggleBlindfold())

// controls go out at a fixed cadence; only changes are sent
let lastSent: ControlState = IDLE_CONTROL
window.setInterval(() => {
  if (input.takeBlindfoldToggle()) view.toggleBlindfold()
  if (input.takeTap()) controller.sendTap()
  const control = input.control()
  if (!sameControl(control, lastSent)) {
    controller.sendControl(control)
    lastSent = control
  }
}, 33)

function render(): void {
  if (view.hello) locale = localeTag(view.hello.locale)

  statusEl.textContent = view.connection +
    (view.hello ? ` | ${view.hello.mode} mode` : '') +
    (player.bufferedSeconds > 0 ? ` | ${(player.bufferedSeconds * 1000).toFixed(0)} ms buffered` : '')
  blindfoldBtn.textContent = view.blindfold ? 'peek (B)' : 'blindfold (B)'

  instructionEl.textContent = view.instruction
    ? view.instruction.name
    : 'waiting for instructions'

  const items = view.feed.slice(-12).reverse()
  feedEl.innerHTML = items
    .map((f) => `<li class="${f.kind}"><span>${f.time.toFixed(1)}s</span> ${f.text}</li>`)
    .join('')

  if (view.metrics) {
    metricsEl.innerHTML = '<h2>session metrics</h2>' + metricsRows(view.metrics)
      .map((r) => `<div><span>${r.label}</span><strong>${r.value}</strong></div>`)
      .join('')
    metricsEl.classList.add('visible')
  }

  if (view.showMap && view.hello) {
    drawMap(canvas, view.hello.layout, view.state, view.trail)
  } else {
    drawBlindfold(canvas)
  }
  window.requestAnimationFrame(render)
}

window.requestAnimationFrame(render)
